from dataclasses import dataclass
from typing import Dict, Optional

Namespace = str
TagName = str


@dataclass
class SvgMetaModel:
    svg_ns: Namespace = "http://www.w3.org/2000/svg"
    version: str = "1.1"

    def tag(self, name: str) -> TagName:
        return f"{{{self.svg_ns}}}{name}"

    @property
    def nsmap(self) -> Dict[Optional[str], Namespace]:
        return {None: self.svg_ns}


DEFAULT_SVG_META = SvgMetaModel()
