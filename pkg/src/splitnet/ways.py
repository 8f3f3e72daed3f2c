"""
Privatization ways: parsing, formatting and enumerating way names.

A way name lists blocks bottom-first; an uppercase letter is a shared block,
a lowercase letter a private one, and "Xx" a shared block with a private copy.
"""
import re
from dataclasses import dataclass
from enum import Enum
from typing import List

from src.utils.exceptions import ConfigurationError, WayParseError

MAX_BLOCKS = 26

# Per-block roles used internally: S shared, P private, D shared + private copy
SHARED, PRIVATE, DOUBLE = "S", "P", "D"

_ROLE_PATTERNS = [re.compile(p) for p in (r"P*S*", r"S*P*", r"D*S*", r"S*D*")]


class WayKind(str, Enum):
    PS = "PS"
    SP = "SP"
    SPS = "SPS"
    SSP = "SSP"


@dataclass(frozen=True)
class PrivatizationWay:
    """kind x boundary b, always held in canonical form"""

    kind: WayKind
    b: int

    def roles(self, num_blocks: int) -> str:
        """One role letter per block, bottom-first"""
        _check_blocks(num_blocks)
        if not 1 <= self.b <= num_blocks:
            raise ConfigurationError(f"boundary b={self.b} outside [1, {num_blocks}]")
        below, above = self.b - 1, num_blocks - self.b + 1
        if self.kind is WayKind.PS:
            return PRIVATE * below + SHARED * above
        if self.kind is WayKind.SP:
            return SHARED * below + PRIVATE * above
        if self.kind is WayKind.SPS:
            return DOUBLE * below + SHARED * above
        return SHARED * below + DOUBLE * above

    @property
    def is_double_branch(self) -> bool:
        return self.kind in (WayKind.SPS, WayKind.SSP) and not self.is_fully_shared

    @property
    def is_fully_shared(self) -> bool:
        return self.kind is WayKind.PS and self.b == 1

    @property
    def has_global_model(self) -> bool:
        """True when the server's shared blocks form a complete network"""
        return self.is_fully_shared or self.kind in (WayKind.SPS, WayKind.SSP)

    @property
    def two_heads(self) -> bool:
        return self.kind is WayKind.SSP


FULLY_SHARED = PrivatizationWay(WayKind.PS, 1)


def _check_blocks(num_blocks: int) -> None:
    if not 1 <= num_blocks <= MAX_BLOCKS:
        raise ConfigurationError(f"block count L={num_blocks} outside [1, {MAX_BLOCKS}]")


def canonical(kind: WayKind, b: int) -> PrivatizationWay:
    """Collapse equivalent ways: SPS(1) has no copies and is fully shared"""
    kind = WayKind(kind)
    if kind is WayKind.SPS and b == 1:
        return FULLY_SHARED
    return PrivatizationWay(kind, int(b))


def _way_from_roles(roles: str, name: str, offsets: List[int]) -> PrivatizationWay:
    for i in range(len(roles)):
        if not any(p.fullmatch(roles[: i + 1]) for p in _ROLE_PATTERNS):
            raise WayParseError("block roles match no privatization pattern", name, offsets[i])
    count = len(roles)
    if set(roles) == {SHARED}:
        return FULLY_SHARED
    if DOUBLE in roles:
        if roles[0] == DOUBLE:
            if roles.count(DOUBLE) == count:
                return canonical(WayKind.SSP, 1)
            return canonical(WayKind.SPS, roles.count(DOUBLE) + 1)
        return canonical(WayKind.SSP, roles.index(DOUBLE) + 1)
    if roles[0] == PRIVATE:
        if roles.count(PRIVATE) == count:
            return canonical(WayKind.SP, 1)
        return canonical(WayKind.PS, roles.count(PRIVATE) + 1)
    return canonical(WayKind.SP, roles.index(PRIVATE) + 1)


def parse_way(name: str, num_blocks: int) -> PrivatizationWay:
    """Parse a way name such as "AaBbCcDE" for a split with num_blocks blocks"""
    _check_blocks(num_blocks)
    if not name:
        raise WayParseError("empty way name", name, 0)
    roles: List[str] = []
    offsets: List[int] = []
    pos = 0
    while pos < len(name):
        block = len(roles)
        char = name[pos]
        if block >= num_blocks:
            raise WayParseError(f"more than L={num_blocks} blocks", name, pos)
        upper, lower = chr(ord("A") + block), chr(ord("a") + block)
        offsets.append(pos)
        if char == upper:
            if pos + 1 < len(name) and name[pos + 1] == lower:
                roles.append(DOUBLE)
                pos += 2
            else:
                roles.append(SHARED)
                pos += 1
        elif char == lower:
            if pos + 1 < len(name) and name[pos + 1] == upper:
                raise WayParseError("lowercase letter before its uppercase", name, pos + 1)
            roles.append(PRIVATE)
            pos += 1
        else:
            raise WayParseError(f"expected '{upper}' or '{lower}', found '{char}'", name, pos)
    if len(roles) != num_blocks:
        raise WayParseError(f"name covers {len(roles)} of L={num_blocks} blocks", name, len(name))
    return _way_from_roles("".join(roles), name, offsets)


def format_way(way: PrivatizationWay, num_blocks: int) -> str:
    parts = []
    for i, role in enumerate(way.roles(num_blocks)):
        upper, lower = chr(ord("A") + i), chr(ord("a") + i)
        parts.append({SHARED: upper, PRIVATE: lower, DOUBLE: upper + lower}[role])
    return "".join(parts)


def enumerate_ways(num_blocks: int) -> List[PrivatizationWay]:
    """Every distinct canonical way, ordered PS, SP, SPS, SSP then by b"""
    _check_blocks(num_blocks)
    seen = []
    for kind in WayKind:
        for b in range(1, num_blocks + 1):
            way = canonical(kind, b)
            if way not in seen:
                seen.append(way)
    return seen
