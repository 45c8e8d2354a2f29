import enum


class TelemetryLevel(enum.Enum):
    RAN = "ran"
    PLATFORM = "platform"
    INFRASTRUCTURE = "infrastructure"


class NodeKind(enum.Enum):
    DU = "du"
    CU = "cu"
    HOST = "host"


class FaultLabel(enum.IntEnum):
    NORMAL = 0
    CPU_STRESS = 1
    MEMORY_STRESS = 2
    PACKET_LOSS = 3

    @property
    def display_name(self) -> str:
        return FAULT_LABEL_NAMES[self]

    @classmethod
    def from_code(cls, code: int) -> "FaultLabel":
        """
        :raises: ValueError if code is not 0..3
        """
        return cls(int(code))


FAULT_LABEL_NAMES = {
    FaultLabel.NORMAL: "Normal",
    FaultLabel.CPU_STRESS: "CPU Stress",
    FaultLabel.MEMORY_STRESS: "Memory Stress",
    FaultLabel.PACKET_LOSS: "Packet Loss",
}

N_CLASSES = len(FaultLabel)
