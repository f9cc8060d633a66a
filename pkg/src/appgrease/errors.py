"""Exception hierarchy shared across the package."""


class AppGreaseError(Exception):
    """Base class for all errors raised by this package."""


# --- ZIP container ---------------------------------------------------------

class MalformedZip(AppGreaseError):
    pass


class UnsupportedCompression(MalformedZip):
    pass


class UnsupportedZipFeature(MalformedZip):
    pass


class CrcMismatch(MalformedZip):
    pass


class EntryNotFound(AppGreaseError):
    pass


# --- binary XML ------------------------------------------------------------

class MalformedAxml(AppGreaseError):
    pass


class CannotRemoveRoot(AppGreaseError):
    pass


class StaleHandle(AppGreaseError):
    pass


class SelectorParseError(AppGreaseError):
    pass


# --- DEX -------------------------------------------------------------------

class MalformedDex(AppGreaseError):
    pass


class DigestMismatch(MalformedDex):
    """Structure parsed fine but the header digests do not match the content."""

    def __init__(self, message, image=None):
        super().__init__(message)
        self.image = image


class LengthMismatch(AppGreaseError):
    pass


class StaleEntry(AppGreaseError):
    pass


# --- extension packages ----------------------------------------------------

class InvalidManifest(AppGreaseError):
    pass


class UnknownActionVariant(InvalidManifest):
    pass


class ActionFailed(AppGreaseError):
    """An action aborted; the extension as a whole is rolled back."""

    def __init__(self, index, cause):
        super().__init__(f"action #{index} failed: {cause}")
        self.index = index
        self.cause = cause


class TreeModeUnavailable(AppGreaseError):
    pass


class PatchContextMismatch(AppGreaseError):
    pass


class NoFilesMatched(AppGreaseError):
    """Raised only when a zero-match text patch must escalate (app-specific scope)."""


# --- signing ---------------------------------------------------------------

class StoreCorrupt(AppGreaseError):
    pass


# --- binary delta ----------------------------------------------------------

class OldFileMismatch(AppGreaseError):
    pass


class CorruptPatch(AppGreaseError):
    pass


# --- repository / server ----------------------------------------------------

class RepositoryLoadError(AppGreaseError):
    pass


# --- server/pipeline -------------------------------------------------------

class MalformedApk(AppGreaseError):
    pass


class NotApplicable(AppGreaseError):
    def __init__(self, extension_ids):
        super().__init__("not applicable: " + ", ".join(extension_ids))
        self.extension_ids = list(extension_ids)
