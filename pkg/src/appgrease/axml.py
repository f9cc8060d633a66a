"""Parse, edit, and serialize Android binary XML documents.

Handles standalone compiled XML (manifests, layouts): string pool chunk,
resource-map chunk, namespace and element chunks with typed attribute values.
The compiled resource table (resources.arsc) is out of scope.

Documents are values: every edit returns a new document. The string pool is
append-only so existing indices stay valid across edits, and serialization
emits the pool in original order with any new strings at the tail.
"""

from __future__ import annotations

import copy
import re
import struct
from dataclasses import dataclass, field

from .errors import CannotRemoveRoot, MalformedAxml, SelectorParseError, StaleHandle

RES_STRING_POOL_TYPE = 0x0001
RES_XML_TYPE = 0x0003
RES_XML_START_NAMESPACE_TYPE = 0x0100
RES_XML_END_NAMESPACE_TYPE = 0x0101
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_END_ELEMENT_TYPE = 0x0103
RES_XML_CDATA_TYPE = 0x0104
RES_XML_RESOURCE_MAP_TYPE = 0x0180

SORTED_FLAG = 1 << 0
UTF8_FLAG = 1 << 8

TYPE_NULL = 0x00
TYPE_REFERENCE = 0x01
TYPE_STRING = 0x03
TYPE_FLOAT = 0x04
TYPE_INT_DEC = 0x10
TYPE_INT_HEX = 0x11
TYPE_INT_BOOLEAN = 0x12

NO_INDEX = 0xFFFFFFFF

ANDROID_NS = "http://schemas.android.com/apk/res/android"


@dataclass
class StringPool:
    strings: list[str]
    utf8: bool = False
    flags: int = 0
    style_offsets: list[int] = field(default_factory=list)
    style_data: bytes = b""
    original_len: int = field(default=-1, compare=False)

    def __post_init__(self):
        if self.original_len < 0:
            self.original_len = len(self.strings)

    def intern(self, s: str) -> int:
        """Index of s, appending if absent. Existing indices never move."""
        try:
            return self.strings.index(s)
        except ValueError:
            self.strings.append(s)
            return len(self.strings) - 1


@dataclass
class XmlAttribute:
    namespace: int  # string index or NO_INDEX
    name: int
    value_type: int
    value_data: int
    raw_value: int = NO_INDEX


@dataclass
class RawChunk:
    data: bytes


@dataclass
class XmlNode:
    namespace: int  # string index or NO_INDEX
    name: int
    attributes: list[XmlAttribute] = field(default_factory=list)
    children: list["XmlNode | RawChunk"] = field(default_factory=list)
    line: int = 1
    comment: int = NO_INDEX


@dataclass
class NamespaceDecl:
    prefix: int
    uri: int
    line: int = 1


@dataclass
class AxmlDocument:
    string_pool: StringPool
    resource_map: list[int]
    namespaces: list[NamespaceDecl]
    root: XmlNode
    prologue: list[RawChunk] = field(default_factory=list)
    epilogue: list[RawChunk] = field(default_factory=list)

    def text(self, index: int) -> str | None:
        if index == NO_INDEX:
            return None
        return self.string_pool.strings[index]


@dataclass(frozen=True)
class NodeHandle:
    """Position of a node in a specific document; valid only for that document."""

    path: tuple[int, ...]
    node: XmlNode


# --- parsing ----------------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u16(self) -> int:
        return self.take("<H")

    def u32(self) -> int:
        return self.take("<I")

    def take(self, fmt: str) -> int:
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise MalformedAxml("truncated chunk")
        (value,) = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return value

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedAxml("truncated chunk")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def _parse_string_pool(chunk: bytes) -> StringPool:
    r = _Reader(chunk)
    ctype, header_size, size = r.u16(), r.u16(), r.u32()
    if ctype != RES_STRING_POOL_TYPE or size != len(chunk):
        raise MalformedAxml("bad string pool chunk")
    string_count = r.u32()
    style_count = r.u32()
    flags = r.u32()
    strings_start = r.u32()
    styles_start = r.u32()
    utf8 = bool(flags & UTF8_FLAG)

    r.pos = header_size
    offsets = [r.u32() for _ in range(string_count)]
    style_offsets = [r.u32() for _ in range(style_count)]

    data_end = styles_start if style_count and styles_start else len(chunk)
    if strings_start > len(chunk) or data_end > len(chunk) or strings_start > data_end:
        raise MalformedAxml("string pool regions out of bounds")
    region = chunk[strings_start:data_end]

    strings = []
    for off in offsets:
        if off >= len(region):
            raise MalformedAxml("string offset out of range")
        strings.append(_decode_string(region, off, utf8))

    style_data = chunk[styles_start:] if style_count and styles_start else b""
    return StringPool(
        strings=strings,
        utf8=utf8,
        flags=flags,
        style_offsets=style_offsets,
        style_data=style_data,
    )


def _decode_length(data: bytes, pos: int, wide: bool) -> tuple[int, int]:
    if wide:
        if pos + 2 > len(data):
            raise MalformedAxml("truncated string length")
        first = struct.unpack_from("<H", data, pos)[0]
        if first & 0x8000:
            if pos + 4 > len(data):
                raise MalformedAxml("truncated string length")
            second = struct.unpack_from("<H", data, pos + 2)[0]
            return ((first & 0x7FFF) << 16) | second, 4
        return first, 2
    if pos >= len(data):
        raise MalformedAxml("truncated string length")
    first = data[pos]
    if first & 0x80:
        if pos + 2 > len(data):
            raise MalformedAxml("truncated string length")
        return ((first & 0x7F) << 8) | data[pos + 1], 2
    return first, 1


def _decode_string(region: bytes, off: int, utf8: bool) -> str:
    if utf8:
        _utf16_len, n = _decode_length(region, off, wide=False)
        byte_len, m = _decode_length(region, off + n, wide=False)
        start = off + n + m
        if start + byte_len > len(region):
            raise MalformedAxml("string data out of range")
        return region[start : start + byte_len].decode("utf-8", "surrogatepass")
    unit_len, n = _decode_length(region, off, wide=True)
    start = off + n
    end = start + unit_len * 2
    if end > len(region):
        raise MalformedAxml("string data out of range")
    return region[start:end].decode("utf-16-le", "surrogatepass")


def _encode_length(value: int, wide: bool) -> bytes:
    if wide:
        if value > 0x7FFFFFFF:
            raise MalformedAxml("string too long")
        if value > 0x7FFF:
            return struct.pack("<HH", 0x8000 | (value >> 16), value & 0xFFFF)
        return struct.pack("<H", value)
    if value > 0x7FFF:
        raise MalformedAxml("string too long")
    if value > 0x7F:
        return bytes([0x80 | (value >> 8), value & 0xFF])
    return bytes([value])


def _encode_string(s: str, utf8: bool) -> bytes:
    if utf8:
        raw = s.encode("utf-8", "surrogatepass")
        utf16_units = len(s)
        return _encode_length(utf16_units, False) + _encode_length(len(raw), False) + raw + b"\x00"
    raw = s.encode("utf-16-le", "surrogatepass")
    return _encode_length(len(raw) // 2, True) + raw + b"\x00\x00"


def _serialize_string_pool(pool: StringPool) -> bytes:
    offsets = []
    blob = bytearray()
    for s in pool.strings:
        offsets.append(len(blob))
        blob += _encode_string(s, pool.utf8)
    while len(blob) % 4:
        blob.append(0)

    style_count = len(pool.style_offsets)
    header_size = 28
    strings_start = header_size + 4 * (len(pool.strings) + style_count)
    styles_start = strings_start + len(blob) if style_count else 0
    flags = pool.flags
    if len(pool.strings) > pool.original_len:
        flags &= ~SORTED_FLAG

    body = bytearray()
    body += struct.pack(
        "<IIIII", len(pool.strings), style_count, flags, strings_start, styles_start
    )
    for off in offsets:
        body += struct.pack("<I", off)
    for off in pool.style_offsets:
        body += struct.pack("<I", off)
    body += blob
    body += pool.style_data
    total = 8 + len(body)
    return struct.pack("<HHI", RES_STRING_POOL_TYPE, header_size, total) + bytes(body)


def parse_axml(data: bytes) -> AxmlDocument:
    """Parse a compiled XML document into a tree with a resolved string pool."""
    if len(data) < 8:
        raise MalformedAxml("too short for a chunk header")
    ftype, fheader, fsize = struct.unpack_from("<HHI", data, 0)
    if ftype != RES_XML_TYPE:
        raise MalformedAxml(f"not a binary XML document (chunk type {ftype:#06x})")
    if fsize > len(data) or fheader < 8:
        raise MalformedAxml("bad document header")

    pool: StringPool | None = None
    resource_map: list[int] = []
    namespaces: list[NamespaceDecl] = []
    prologue: list[RawChunk] = []
    epilogue: list[RawChunk] = []
    root: XmlNode | None = None
    stack: list[XmlNode] = []

    pos = fheader
    while pos + 8 <= fsize:
        ctype, cheader, csize = struct.unpack_from("<HHI", data, pos)
        if csize < 8 or pos + csize > fsize:
            raise MalformedAxml("truncated chunk")
        chunk = data[pos : pos + csize]
        pos += csize

        if ctype == RES_STRING_POOL_TYPE:
            if pool is not None:
                raise MalformedAxml("multiple string pools")
            pool = _parse_string_pool(chunk)
            continue
        if ctype == RES_XML_RESOURCE_MAP_TYPE:
            count = (csize - cheader) // 4
            resource_map = list(struct.unpack_from(f"<{count}I", chunk, cheader))
            continue
        if ctype in (
            RES_XML_START_NAMESPACE_TYPE,
            RES_XML_END_NAMESPACE_TYPE,
            RES_XML_START_ELEMENT_TYPE,
            RES_XML_END_ELEMENT_TYPE,
        ):
            if pool is None:
                raise MalformedAxml("element chunk before string pool")
            r = _Reader(chunk)
            r.pos = 8
            line = r.u32()
            comment = r.u32()
            r.pos = cheader
            if ctype == RES_XML_START_NAMESPACE_TYPE:
                prefix, uri = r.u32(), r.u32()
                _check_index(prefix, pool, optional=True)
                _check_index(uri, pool, optional=True)
                namespaces.append(NamespaceDecl(prefix=prefix, uri=uri, line=line))
            elif ctype == RES_XML_END_NAMESPACE_TYPE:
                pass
            elif ctype == RES_XML_START_ELEMENT_TYPE:
                node = _parse_start_element(r, pool, line, comment)
                if stack:
                    stack[-1].children.append(node)
                elif root is None:
                    root = node
                else:
                    raise MalformedAxml("multiple root elements")
                stack.append(node)
            else:  # end element
                if not stack:
                    raise MalformedAxml("unbalanced end element")
                stack.pop()
            continue

        # Unknown chunk (including CDATA): preserve as an opaque blob in place.
        if stack:
            stack[-1].children.append(RawChunk(chunk))
        elif root is None:
            prologue.append(RawChunk(chunk))
        else:
            epilogue.append(RawChunk(chunk))

    if pool is None:
        raise MalformedAxml("document has no string pool")
    if stack:
        raise MalformedAxml("unterminated element")
    if root is None:
        raise MalformedAxml("document has no root element")

    return AxmlDocument(
        string_pool=pool,
        resource_map=resource_map,
        namespaces=namespaces,
        root=root,
        prologue=prologue,
        epilogue=epilogue,
    )


def _check_index(index: int, pool: StringPool, optional: bool = False) -> None:
    if index == NO_INDEX:
        if optional:
            return
        raise MalformedAxml("missing required string index")
    if not 0 <= index < len(pool.strings):
        raise MalformedAxml(f"string index {index} out of range")


def _parse_start_element(r: _Reader, pool: StringPool, line: int, comment: int) -> XmlNode:
    ns = r.u32()
    name = r.u32()
    attr_start = r.u16()
    attr_size = r.u16()
    attr_count = r.u16()
    r.u16()  # id index
    r.u16()  # class index
    r.u16()  # style index
    _check_index(ns, pool, optional=True)
    _check_index(name, pool)
    if attr_size < 20:
        raise MalformedAxml("attribute record too small")

    base = 16 + attr_start
    attrs = []
    for i in range(attr_count):
        r.pos = base + i * attr_size
        a_ns = r.u32()
        a_name = r.u32()
        a_raw = r.u32()
        r.u16()  # value size
        r.take("<B")  # res0
        a_type = r.take("<B")
        a_data = r.u32()
        _check_index(a_ns, pool, optional=True)
        _check_index(a_name, pool)
        if a_type == TYPE_STRING:
            _check_index(a_data, pool)
        attrs.append(
            XmlAttribute(
                namespace=a_ns,
                name=a_name,
                value_type=a_type,
                value_data=a_data,
                raw_value=a_raw,
            )
        )
    return XmlNode(namespace=ns, name=name, attributes=attrs, line=line, comment=comment)


# --- serialization ----------------------------------------------------------


def serialize_axml(doc: AxmlDocument) -> bytes:
    """Serialize back to the chunk format; parse_axml inverts it."""
    _validate_document(doc)
    pool_bytes = _serialize_string_pool(doc.string_pool)

    body = bytearray()
    body += pool_bytes
    if doc.resource_map:
        body += struct.pack("<HHI", RES_XML_RESOURCE_MAP_TYPE, 8, 8 + 4 * len(doc.resource_map))
        body += struct.pack(f"<{len(doc.resource_map)}I", *doc.resource_map)
    for raw in doc.prologue:
        body += raw.data
    for ns in doc.namespaces:
        body += _namespace_chunk(RES_XML_START_NAMESPACE_TYPE, ns)
    _serialize_node(doc.root, doc.string_pool, body)
    for ns in reversed(doc.namespaces):
        body += _namespace_chunk(RES_XML_END_NAMESPACE_TYPE, ns)
    for raw in doc.epilogue:
        body += raw.data

    return struct.pack("<HHI", RES_XML_TYPE, 8, 8 + len(body)) + bytes(body)


def _namespace_chunk(ctype: int, ns: NamespaceDecl) -> bytes:
    return struct.pack("<HHIII", ctype, 16, 24, ns.line, NO_INDEX) + struct.pack(
        "<II", ns.prefix, ns.uri
    )


def _serialize_node(node: XmlNode, pool: StringPool, out: bytearray) -> None:
    id_index = class_index = style_index = 0
    for i, attr in enumerate(node.attributes):
        name = pool.strings[attr.name]
        has_android_ns = attr.namespace != NO_INDEX and pool.strings[attr.namespace] == ANDROID_NS
        if name == "id" and has_android_ns:
            id_index = i + 1
        elif name == "class" and attr.namespace == NO_INDEX:
            class_index = i + 1
        elif name == "style" and attr.namespace == NO_INDEX:
            style_index = i + 1

    size = 16 + 20 + 20 * len(node.attributes)
    out += struct.pack("<HHIII", RES_XML_START_ELEMENT_TYPE, 16, size, node.line, node.comment)
    out += struct.pack(
        "<IIHHHHHH",
        node.namespace,
        node.name,
        20,
        20,
        len(node.attributes),
        id_index,
        class_index,
        style_index,
    )
    for attr in node.attributes:
        raw = attr.value_data if attr.value_type == TYPE_STRING else attr.raw_value
        out += struct.pack(
            "<IIIHBBI",
            attr.namespace,
            attr.name,
            raw,
            8,
            0,
            attr.value_type,
            attr.value_data,
        )

    for child in node.children:
        if isinstance(child, RawChunk):
            out += child.data
        else:
            _serialize_node(child, pool, out)

    out += struct.pack("<HHIII", RES_XML_END_ELEMENT_TYPE, 16, 24, node.line, NO_INDEX)
    out += struct.pack("<II", node.namespace, node.name)


def _validate_document(doc: AxmlDocument) -> None:
    pool = doc.string_pool

    def check(index: int, optional: bool = False) -> None:
        _check_index(index, pool, optional=optional)

    for ns in doc.namespaces:
        check(ns.prefix, optional=True)
        check(ns.uri, optional=True)

    def walk(node: XmlNode) -> None:
        check(node.namespace, optional=True)
        check(node.name)
        for attr in node.attributes:
            check(attr.namespace, optional=True)
            check(attr.name)
            if attr.value_type == TYPE_STRING:
                check(attr.value_data)
        for child in node.children:
            if isinstance(child, XmlNode):
                walk(child)

    walk(doc.root)


# --- selectors and editing ---------------------------------------------------


_STEP_RE = re.compile(r"^([^/\[\]=]+)((?:\[[^\[\]=]+=[^\[\]]*\])*)$")
_PRED_RE = re.compile(r"\[([^\[\]=]+)=([^\[\]]*)\]")


@dataclass(frozen=True)
class SelectorStep:
    name: str
    predicates: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class ElementSelector:
    steps: tuple[SelectorStep, ...]

    def __str__(self) -> str:
        parts = []
        for step in self.steps:
            preds = "".join(f"[{k}={v}]" for k, v in step.predicates)
            parts.append(step.name + preds)
        return "/".join(parts)


def parse_selector(text: str) -> ElementSelector:
    """Parse a slash path of element names with [attr=value] predicates."""
    if not text or not text.strip():
        raise SelectorParseError("empty selector")
    steps = []
    for part in text.split("/"):
        m = _STEP_RE.match(part)
        if not m:
            raise SelectorParseError(f"bad selector step {part!r} in {text!r}")
        preds = tuple(_PRED_RE.findall(m.group(2)))
        steps.append(SelectorStep(name=m.group(1), predicates=preds))
    return ElementSelector(steps=tuple(steps))


def attribute_text(doc: AxmlDocument, attr: XmlAttribute) -> str:
    """Human-readable form of a typed value, used by selector predicates."""
    t, d = attr.value_type, attr.value_data
    if t == TYPE_STRING:
        return doc.string_pool.strings[d]
    if t == TYPE_INT_BOOLEAN:
        return "true" if d else "false"
    if t == TYPE_INT_DEC:
        return str(d - 2**32 if d >= 2**31 else d)
    if t == TYPE_INT_HEX:
        return f"0x{d:x}"
    if t == TYPE_REFERENCE:
        return f"@0x{d:08x}"
    if t == TYPE_FLOAT:
        return repr(struct.unpack("<f", struct.pack("<I", d))[0])
    return f"0x{d:08x}"


def _step_matches(doc: AxmlDocument, node: XmlNode, step: SelectorStep) -> bool:
    if doc.string_pool.strings[node.name] != step.name:
        return False
    for key, want in step.predicates:
        for attr in node.attributes:
            if doc.string_pool.strings[attr.name] == key and attribute_text(doc, attr) == want:
                break
        else:
            return False
    return True


def find_elements(doc: AxmlDocument, selector: ElementSelector | str) -> list[NodeHandle]:
    """All nodes matching the selector, in document order.

    The path may start at any depth; consecutive steps bind parent to child.
    """
    if isinstance(selector, str):
        selector = parse_selector(selector)
    steps = selector.steps
    matches: list[NodeHandle] = []

    def walk(node: XmlNode, path: tuple[int, ...], chain: list[XmlNode]) -> None:
        chain.append(node)
        if len(chain) >= len(steps):
            candidate = chain[-len(steps) :]
            if all(_step_matches(doc, n, s) for n, s in zip(candidate, steps)):
                matches.append(NodeHandle(path=path, node=node))
        for i, child in enumerate(node.children):
            if isinstance(child, XmlNode):
                walk(child, path + (i,), chain)
        chain.pop()

    walk(doc.root, (), [])
    return matches


def _resolve(doc: AxmlDocument, handle: NodeHandle) -> XmlNode:
    node: XmlNode = doc.root
    for idx in handle.path:
        try:
            child = node.children[idx]
        except IndexError:
            raise StaleHandle("path no longer resolves") from None
        if not isinstance(child, XmlNode):
            raise StaleHandle("path no longer resolves to an element")
        node = child
    if node is not handle.node:
        raise StaleHandle("handle does not belong to this document")
    return node


def remove_element(doc: AxmlDocument, handle: NodeHandle) -> AxmlDocument:
    """Remove the node and its subtree; everything else is untouched."""
    _resolve(doc, handle)
    if not handle.path:
        raise CannotRemoveRoot("refusing to remove the document root")
    new_doc = copy.deepcopy(doc)
    parent = new_doc.root
    for idx in handle.path[:-1]:
        parent = parent.children[idx]
    del parent.children[handle.path[-1]]
    return new_doc


def intern_string(doc: AxmlDocument, s: str) -> int:
    return doc.string_pool.intern(s)


def coerce_typed_value(doc: AxmlDocument, value) -> tuple[int, int]:
    """Map a friendly value to (type code, data), interning strings.

    Accepts str, bool, int, or an explicit (kind, value) pair with kind in
    {"string", "boolean", "int", "hex", "reference"}.
    """
    if isinstance(value, tuple):
        kind, v = value
        if kind == "string":
            return TYPE_STRING, intern_string(doc, str(v))
        if kind == "boolean":
            return TYPE_INT_BOOLEAN, 0xFFFFFFFF if v else 0
        if kind == "int":
            return TYPE_INT_DEC, int(v) & 0xFFFFFFFF
        if kind == "hex":
            return TYPE_INT_HEX, int(v) & 0xFFFFFFFF
        if kind == "reference":
            v = int(v, 16) if isinstance(v, str) else int(v)
            return TYPE_REFERENCE, v & 0xFFFFFFFF
        raise ValueError(f"unknown typed-value kind {kind!r}")
    if isinstance(value, bool):
        return TYPE_INT_BOOLEAN, 0xFFFFFFFF if value else 0
    if isinstance(value, int):
        return TYPE_INT_DEC, value & 0xFFFFFFFF
    if isinstance(value, str):
        return TYPE_STRING, intern_string(doc, value)
    raise ValueError(f"cannot encode attribute value {value!r}")


def set_attribute(
    doc: AxmlDocument,
    handle: NodeHandle,
    namespace: str | None,
    name: str,
    value,
) -> AxmlDocument:
    """Add or replace an attribute on the node; last write wins."""
    _resolve(doc, handle)
    new_doc = copy.deepcopy(doc)
    node = new_doc.root
    for idx in handle.path:
        node = node.children[idx]

    ns_idx = NO_INDEX if namespace is None else intern_string(new_doc, namespace)
    name_idx = intern_string(new_doc, name)
    vtype, vdata = coerce_typed_value(new_doc, value)
    raw = vdata if vtype == TYPE_STRING else NO_INDEX
    attr = XmlAttribute(
        namespace=ns_idx, name=name_idx, value_type=vtype, value_data=vdata, raw_value=raw
    )
    for i, existing in enumerate(node.attributes):
        if existing.namespace == ns_idx and existing.name == name_idx:
            node.attributes[i] = attr
            return new_doc
    node.attributes.append(attr)
    return new_doc


def insert_element(
    doc: AxmlDocument,
    parent: NodeHandle,
    name: str,
    attributes: list[tuple[str | None, str, object]] = (),
) -> AxmlDocument:
    """Append a child element with the given attributes to the parent node."""
    _resolve(doc, parent)
    new_doc = copy.deepcopy(doc)
    node = new_doc.root
    for idx in parent.path:
        node = node.children[idx]

    child = XmlNode(namespace=NO_INDEX, name=intern_string(new_doc, name), line=node.line)
    for ns, attr_name, value in attributes:
        ns_idx = NO_INDEX if ns is None else intern_string(new_doc, ns)
        name_idx = intern_string(new_doc, attr_name)
        vtype, vdata = coerce_typed_value(new_doc, value)
        raw = vdata if vtype == TYPE_STRING else NO_INDEX
        child.attributes.append(
            XmlAttribute(
                namespace=ns_idx, name=name_idx, value_type=vtype, value_data=vdata,
                raw_value=raw,
            )
        )
    node.children.append(child)
    return new_doc


def get_attribute(
    doc: AxmlDocument, node: XmlNode, namespace: str | None, name: str
) -> XmlAttribute | None:
    for attr in node.attributes:
        if doc.text(attr.name) != name:
            continue
        attr_ns = doc.text(attr.namespace) if attr.namespace != NO_INDEX else None
        if attr_ns == namespace:
            return attr
    return None


def node_name(doc: AxmlDocument, node: XmlNode) -> str:
    return doc.string_pool.strings[node.name]


def build_document(
    root_name: str,
    build,
    utf8: bool = False,
    namespaces: list[tuple[str, str]] = (),
) -> AxmlDocument:
    """Construct a document programmatically.

    `build(doc, root_handle)` receives the empty document and adds content
    through the ordinary editing operations.
    """
    pool = StringPool(strings=[], utf8=utf8, flags=UTF8_FLAG if utf8 else 0)
    pool.original_len = 0
    root = XmlNode(namespace=NO_INDEX, name=pool.intern(root_name))
    doc = AxmlDocument(string_pool=pool, resource_map=[], namespaces=[], root=root)
    for prefix, uri in namespaces:
        doc.namespaces.append(NamespaceDecl(prefix=pool.intern(prefix), uri=pool.intern(uri)))
    if build is not None:
        doc = build(doc)
    return doc
