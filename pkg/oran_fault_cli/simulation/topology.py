import dataclasses
from typing import Tuple

from ..telemetry.schema import HOST_ID, cu_id, du_id


@dataclasses.dataclass(frozen=True)
class Topology:
    """
    One-to-one CU/DU/UE triples sharing a single host
    """

    pairs: Tuple[Tuple[str, str, str], ...]
    host_id: str = HOST_ID

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("Topology needs at least one CU/DU/UE triple")
        ids = [node for pair in self.pairs for node in pair] + [self.host_id]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Topology ids must be unique, got {ids}")

    @classmethod
    def of_size(cls, n: int) -> "Topology":
        if n < 1:
            raise ValueError(f"Topology size {n} must be >= 1")
        return cls(tuple((cu_id(i), du_id(i), f"ue{i}") for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.pairs)

    @property
    def du_ids(self) -> Tuple[str, ...]:
        return tuple(du for _, du, _ in self.pairs)

    @property
    def cu_ids(self) -> Tuple[str, ...]:
        return tuple(cu for cu, _, _ in self.pairs)

    def pair_index(self, container: str) -> int:
        """
        :return: index of the pair owning a CU or DU container
        """
        for index, (cu, du, _) in enumerate(self.pairs):
            if container in (cu, du):
                return index
        raise ValueError(f"{container} is not a container of the topology")
