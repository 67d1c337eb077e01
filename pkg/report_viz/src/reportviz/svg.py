"""Minimal deterministic SVG assembly.

Every element is emitted with fixed float formatting and no timestamps, so
identical inputs produce identical bytes. Panels advertise their data-to-
pixel affine map through data-* attributes, which lets tests invert the
geometry of emitted points.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


@dataclass
class Element:
    tag: str
    attrs: dict
    children: list = field(default_factory=list)
    text: str | None = None

    def add(self, tag, **attrs) -> "Element":
        child = Element(tag, attrs)
        self.children.append(child)
        return child

    def add_text(self, tag, content, **attrs) -> "Element":
        child = Element(tag, attrs, text=content)
        self.children.append(child)
        return child

    def to_string(self, indent=0) -> str:
        pad = "  " * indent
        parts = [f"{pad}<{self.tag}"]
        for k, v in self.attrs.items():
            key = k.replace("_", "-")
            parts.append(f' {key}="{esc(v)}"')
        if not self.children and self.text is None:
            parts.append("/>")
            return "".join(parts)
        parts.append(">")
        if self.text is not None:
            parts.append(esc(self.text))
        if self.children:
            parts.append("\n")
            for child in self.children:
                parts.append(child.to_string(indent + 1))
                parts.append("\n")
            parts.append(pad)
        parts.append(f"</{self.tag}>")
        return "".join(parts)


@dataclass
class Frame:
    """Affine map from data coordinates to a pixel viewport."""

    px_x: float
    px_y: float
    px_w: float
    px_h: float
    x0: float
    x1: float
    y0: float
    y1: float

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        fx = (x - self.x0) / (self.x1 - self.x0) if self.x1 != self.x0 else 0.5
        fy = (y - self.y0) / (self.y1 - self.y0) if self.y1 != self.y0 else 0.5
        return self.px_x + fx * self.px_w, self.px_y + (1.0 - fy) * self.px_h

    def attrs(self) -> dict:
        return {
            "data-px-x": fmt(self.px_x),
            "data-px-y": fmt(self.px_y),
            "data-px-w": fmt(self.px_w),
            "data-px-h": fmt(self.px_h),
            "data-x0": repr(self.x0),
            "data-x1": repr(self.x1),
            "data-y0": repr(self.y0),
            "data-y1": repr(self.y1),
        }


def document(width: int, height: int) -> Element:
    return Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": width,
            "height": height,
            "viewBox": f"0 0 {width} {height}",
            "font-family": "Helvetica, Arial, sans-serif",
        },
    )


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10 ** int(f"{raw:e}".split("e")[1])
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            step = m * mag
            break
    first = step * round(lo / step)
    if first < lo - 1e-12:
        first += step
    ticks = []
    v = first
    while v <= hi + 1e-9:
        ticks.append(round(v, 10))
        v += step
    return ticks
