"""Per-user signing key and APK Signature Scheme v2 sign/verify.

Only v2 with RSA-2048 / SHA-256 / PKCS#1 v1.5 is produced: the padding is
deterministic, so signing the same bytes with the same key twice yields
byte-identical output, which the reproducibility guarantees elsewhere rely
on. Any signing block already present on the input is stripped and replaced.
"""

from __future__ import annotations

import datetime
import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

from cryptography import x509
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.x509.oid import NameOID

from .container import find_eocd
from .errors import MalformedZip, StoreCorrupt

SIG_BLOCK_MAGIC = b"APK Sig Block 42"
V2_BLOCK_ID = 0x7109871A
ALG_RSA_PKCS1_SHA256 = 0x0103
CHUNK_SIZE = 1024 * 1024

CERT_SUBJECT = "AppGrease User Key"
CERT_VALIDITY_YEARS = 30  # comfortably past the 25-year floor device installs expect


@dataclass
class SigningKey:
    private_key: rsa.RSAPrivateKey
    certificate: x509.Certificate

    @property
    def certificate_der(self) -> bytes:
        return self.certificate.public_bytes(serialization.Encoding.DER)

    @property
    def public_key_der(self) -> bytes:
        return self.certificate.public_key().public_bytes(
            serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
        )

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.certificate_der).hexdigest()


@dataclass
class VerificationReport:
    ok: bool
    reason: str | None = None
    certificate_sha256: str | None = None
    algorithm_id: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def generate_key(store_path: str | Path) -> SigningKey:
    """Load the signing key at store_path, creating it on first use.

    Stable identity: every later call returns the same key, so re-signing an
    updated app keeps the certificate (and therefore the app's data) intact.
    """
    store = Path(store_path)
    if store.exists():
        return _load_key(store)

    private_key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, CERT_SUBJECT)])
    now = datetime.datetime.now(datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(private_key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(days=1))
        .not_valid_after(now + datetime.timedelta(days=365 * CERT_VALIDITY_YEARS))
        .sign(private_key, hashes.SHA256())
    )

    store.parent.mkdir(parents=True, exist_ok=True)
    pem = private_key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    ) + cert.public_bytes(serialization.Encoding.PEM)
    tmp = store.with_suffix(store.suffix + ".tmp")
    tmp.write_bytes(pem)
    os.chmod(tmp, 0o600)
    tmp.replace(store)
    return SigningKey(private_key=private_key, certificate=cert)


def _load_key(store: Path) -> SigningKey:
    try:
        blob = store.read_bytes()
        private_key = serialization.load_pem_private_key(blob, password=None)
        cert = x509.load_pem_x509_certificate(blob)
    except Exception as exc:
        raise StoreCorrupt(f"cannot load key store {store}: {exc}") from None
    if not isinstance(private_key, rsa.RSAPrivateKey):
        raise StoreCorrupt("key store does not hold an RSA key")
    if cert.public_key().public_numbers() != private_key.public_key().public_numbers():
        raise StoreCorrupt("certificate does not match the private key")
    return SigningKey(private_key=private_key, certificate=cert)


# --- digesting ---------------------------------------------------------------


def _chunk_digest(chunk: bytes) -> bytes:
    return hashlib.sha256(b"\xa5" + struct.pack("<I", len(chunk)) + chunk).digest()


def _chunks(data: bytes):
    for pos in range(0, len(data), CHUNK_SIZE):
        yield data[pos : pos + CHUNK_SIZE]


def content_digest(entries: bytes, central_dir: bytes, eocd: bytes, sig_block_offset: int) -> bytes:
    """Top-level chunked SHA-256 over the three ZIP sections.

    The EOCD's central-directory offset field is treated as pointing at the
    signing block, so the digest is independent of the block's size.
    """
    eocd_patched = eocd[:16] + struct.pack("<I", sig_block_offset) + eocd[20:]
    digests = []
    for section in (entries, central_dir, eocd_patched):
        digests.extend(_chunk_digest(c) for c in _chunks(section))
    top = b"\x5a" + struct.pack("<I", len(digests)) + b"".join(digests)
    return hashlib.sha256(top).digest()


# --- length-prefixed framing --------------------------------------------------


def _lp(blob: bytes) -> bytes:
    return struct.pack("<I", len(blob)) + blob


def _lp_sequence(items: list[bytes]) -> bytes:
    return _lp(b"".join(_lp(item) for item in items))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u32(self) -> int:
        if self.pos + 4 > len(self.data):
            raise ValueError("truncated block")
        (v,) = struct.unpack_from("<I", self.data, self.pos)
        self.pos += 4
        return v

    def lp(self) -> bytes:
        n = self.u32()
        if self.pos + n > len(self.data):
            raise ValueError("truncated block")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def done(self) -> bool:
        return self.pos >= len(self.data)


def _lp_items(blob: bytes):
    cur = _Cursor(blob)
    while not cur.done():
        yield cur.lp()


# --- signing ------------------------------------------------------------------


def _zip_sections(data: bytes) -> tuple[bytes, bytes, bytes]:
    """Split into (entries, central directory, eocd), stripping any signing block."""
    eocd_pos, cd_offset, cd_size, _count = find_eocd(data)
    if cd_offset > eocd_pos:
        raise MalformedZip("central directory offset past the end record")
    entries_end = cd_offset
    if cd_offset >= 32 and data[cd_offset - 16 : cd_offset] == SIG_BLOCK_MAGIC:
        (block_size,) = struct.unpack_from("<Q", data, cd_offset - 24)
        block_start = cd_offset - block_size - 8
        if 0 <= block_start < cd_offset:
            (head_size,) = struct.unpack_from("<Q", data, block_start)
            if head_size == block_size:
                entries_end = block_start
    return data[:entries_end], data[cd_offset : cd_offset + cd_size], data[eocd_pos:]


def sign_apk(data: bytes, key: SigningKey) -> bytes:
    """Insert a v2 signing block before the central directory."""
    entries, central_dir, eocd = _zip_sections(data)
    sig_block_offset = len(entries)
    digest = content_digest(entries, central_dir, eocd, sig_block_offset)

    signed_data = (
        _lp_sequence([struct.pack("<I", ALG_RSA_PKCS1_SHA256) + _lp(digest)])
        + _lp_sequence([key.certificate_der])
        + _lp_sequence([])  # additional attributes
    )
    signature = key.private_key.sign(signed_data, padding.PKCS1v15(), hashes.SHA256())
    signer = (
        _lp(signed_data)
        + _lp_sequence([struct.pack("<I", ALG_RSA_PKCS1_SHA256) + _lp(signature)])
        + _lp(key.public_key_der)
    )
    v2_value = _lp_sequence([signer])

    pair = struct.pack("<QI", 4 + len(v2_value), V2_BLOCK_ID) + v2_value
    block_size = len(pair) + 24
    block = (
        struct.pack("<Q", block_size)
        + pair
        + struct.pack("<Q", block_size)
        + SIG_BLOCK_MAGIC
    )

    new_cd_offset = sig_block_offset + len(block)
    new_eocd = eocd[:16] + struct.pack("<I", new_cd_offset) + eocd[20:]
    return entries + block + central_dir + new_eocd


def _extract_v2(data: bytes):
    """Returns (v2 value bytes, entries, central dir, eocd, block offset) or a reason."""
    try:
        eocd_pos, cd_offset, cd_size, _count = find_eocd(data)
    except MalformedZip as exc:
        return None, str(exc)
    if cd_offset < 32 or data[cd_offset - 16 : cd_offset] != SIG_BLOCK_MAGIC:
        return None, "NoSigningBlock"
    (block_size,) = struct.unpack_from("<Q", data, cd_offset - 24)
    block_start = cd_offset - block_size - 8
    if block_start < 0:
        return None, "bad signing block size"
    (head_size,) = struct.unpack_from("<Q", data, block_start)
    if head_size != block_size:
        return None, "signing block size fields disagree"

    pairs = data[block_start + 8 : cd_offset - 24]
    pos = 0
    v2_value = None
    while pos + 12 <= len(pairs):
        pair_len, pair_id = struct.unpack_from("<QI", pairs, pos)
        value = pairs[pos + 12 : pos + 8 + pair_len]
        if pair_id == V2_BLOCK_ID:
            v2_value = value
        pos += 8 + pair_len
    if v2_value is None:
        return None, "no v2 signature in the signing block"

    sections = (
        data[:block_start],
        data[cd_offset : cd_offset + cd_size],
        data[eocd_pos:],
        block_start,
    )
    return (v2_value, *sections), None


def verify_apk(data: bytes) -> VerificationReport:
    """Recompute the chunked digests and check the v2 signature."""
    extracted, reason = _extract_v2(data)
    if extracted is None:
        return VerificationReport(ok=False, reason=reason)
    v2_value, entries, central_dir, eocd, block_offset = extracted

    try:
        signers = list(_lp_items(_Cursor(v2_value).lp()))
        if not signers:
            return VerificationReport(ok=False, reason="no signers")
        cur = _Cursor(signers[0])
        signed_data = cur.lp()
        signatures = list(_lp_items(cur.lp()))
        public_key_der = cur.lp()

        sig_bytes = None
        for record in signatures:
            rcur = _Cursor(record)
            alg = rcur.u32()
            blob = rcur.lp()
            if alg == ALG_RSA_PKCS1_SHA256:
                sig_bytes = blob
        if sig_bytes is None:
            return VerificationReport(ok=False, reason="no supported signature algorithm")

        public_key = serialization.load_der_public_key(public_key_der)
        try:
            public_key.verify(sig_bytes, signed_data, padding.PKCS1v15(), hashes.SHA256())
        except InvalidSignature:
            return VerificationReport(ok=False, reason="signature check failed")

        sd = _Cursor(signed_data)
        digest_records = list(_lp_items(sd.lp()))
        certs = list(_lp_items(sd.lp()))
        declared = None
        for record in digest_records:
            rcur = _Cursor(record)
            alg = rcur.u32()
            blob = rcur.lp()
            if alg == ALG_RSA_PKCS1_SHA256:
                declared = blob
        if declared is None:
            return VerificationReport(ok=False, reason="no supported digest algorithm")
        if not certs:
            return VerificationReport(ok=False, reason="no certificate")

        cert = x509.load_der_x509_certificate(certs[0])
        cert_spki = cert.public_key().public_bytes(
            serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
        )
        if cert_spki != public_key_der:
            return VerificationReport(ok=False, reason="certificate does not match public key")
    except ValueError as exc:
        return VerificationReport(ok=False, reason=f"malformed signing block: {exc}")

    actual = content_digest(entries, central_dir, eocd, block_offset)
    if actual != declared:
        return VerificationReport(
            ok=False,
            reason="content digest mismatch",
            certificate_sha256=hashlib.sha256(certs[0]).hexdigest(),
            algorithm_id=ALG_RSA_PKCS1_SHA256,
        )
    return VerificationReport(
        ok=True,
        certificate_sha256=hashlib.sha256(certs[0]).hexdigest(),
        algorithm_id=ALG_RSA_PKCS1_SHA256,
    )
