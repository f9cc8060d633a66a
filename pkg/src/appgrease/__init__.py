"""appgrease: rewrite Android apps with declarative harm-reduction patches.

The pieces, bottom to top: `container` (APK/ZIP values), `axml` (binary XML),
`dex` (string-table edits), `extensions` (the patch DSL and dispatcher),
`signer` (v2 signing), `delta` (binary patches), `pipeline` (the whole run),
`server` (HTTP job service), `cli` (command-line front end).
"""

__version__ = "0.1.0"
