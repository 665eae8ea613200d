"""64 KB memory bus with the sound chip mapped at its documented base address."""

from __future__ import annotations

from .sid import BASE_ADDRESS, NUM_REGISTERS, SidChip


class SystemBus:
    """Byte-addressed bus: plain RAM everywhere except the chip register window.

    `sid_access_hook`, when set, is invoked before any chip register write and
    before reads of the live offsets 27/28; the co-simulation uses it to bring
    rendered audio up to the current simulated time first.
    """

    def __init__(self, sid: SidChip | None = None):
        self.ram = bytearray(65536)
        self.sid = sid
        self.sid_access_hook = None

    def _sid_offset(self, address: int) -> int | None:
        if self.sid is not None and BASE_ADDRESS <= address < BASE_ADDRESS + NUM_REGISTERS:
            return address - BASE_ADDRESS
        return None

    def poke(self, address: int, value: int) -> None:
        if not 0 <= address <= 65535:
            raise ValueError(f"bus address {address} out of range 0..65535")
        if not 0 <= value <= 255:
            raise ValueError(f"bus value {value} out of range 0..255")
        offset = self._sid_offset(address)
        if offset is None:
            self.ram[address] = value
            return
        if self.sid_access_hook is not None:
            self.sid_access_hook()
        self.sid.poke(offset, value)

    def peek(self, address: int) -> int:
        if not 0 <= address <= 65535:
            raise ValueError(f"bus address {address} out of range 0..65535")
        offset = self._sid_offset(address)
        if offset is None:
            return self.ram[address]
        if offset >= 27 and self.sid_access_hook is not None:
            self.sid_access_hook()
        return self.sid.peek(offset)
