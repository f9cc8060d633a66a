"""Fixture APKs assembled with the standard-library archiver (zipfile),
independent of the container writer under test."""

from __future__ import annotations

import io
import random
import zipfile

from fab_axml import fixture_layout, fixture_manifest, fixture_netsec_config_with_pins
from fab_dex import FIXTURE_STRINGS, SECOND_DEX_STRINGS, build_dex

LAYOUT_ENTRY = "res/layout/main.xml"


def build_fixture_apk(
    package: str = "com.example.fixture",
    second_dex: bool = False,
    with_netsec_config: bool = False,
    extra_entries: dict[str, bytes] | None = None,
    asset_size: int = 4096,
    seed: int = 7,
) -> bytes:
    rng = random.Random(seed)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("AndroidManifest.xml", fixture_manifest(package), zipfile.ZIP_DEFLATED)
        z.writestr("classes.dex", build_dex(FIXTURE_STRINGS), zipfile.ZIP_DEFLATED)
        if second_dex:
            z.writestr("classes2.dex", build_dex(SECOND_DEX_STRINGS), zipfile.ZIP_DEFLATED)
        z.writestr(LAYOUT_ENTRY, fixture_layout(), zipfile.ZIP_DEFLATED)
        if with_netsec_config:
            z.writestr(
                "res/xml/network_security_config.xml",
                fixture_netsec_config_with_pins(),
                zipfile.ZIP_DEFLATED,
            )
        z.writestr("assets/data.bin", rng.randbytes(asset_size), zipfile.ZIP_STORED)
        z.writestr("res/raw/blob.bin", b"compressible " * 200, zipfile.ZIP_DEFLATED)
        for name, payload in (extra_entries or {}).items():
            z.writestr(name, payload, zipfile.ZIP_STORED)
    return buf.getvalue()


def build_large_apk(total_size: int = 20 * 1024 * 1024, asset_size: int = 50 * 1024,
                    seed: int = 11) -> tuple[bytes, str]:
    """A multi-megabyte fixture: one swappable asset plus incompressible bulk.

    Returns (apk bytes, name of the swappable 50 KiB asset entry).
    """
    rng = random.Random(seed)
    swappable = "assets/swappable.bin"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("AndroidManifest.xml", fixture_manifest(), zipfile.ZIP_DEFLATED)
        z.writestr("classes.dex", build_dex(FIXTURE_STRINGS), zipfile.ZIP_DEFLATED)
        z.writestr(LAYOUT_ENTRY, fixture_layout(), zipfile.ZIP_DEFLATED)
        z.writestr(swappable, rng.randbytes(asset_size), zipfile.ZIP_STORED)
        chunk = 2 * 1024 * 1024
        index = 0
        while buf.tell() < total_size:
            z.writestr(f"assets/bulk/{index:03d}.bin", rng.randbytes(chunk), zipfile.ZIP_STORED)
            index += 1
    return buf.getvalue(), swappable
