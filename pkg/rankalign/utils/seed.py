import hashlib

import numpy as np

_MAX_SEED = 2 ** 64 - 1


class Seed:

    def __init__(self, value: int, spawn_key: tuple[int, ...] = ()) -> None:
        """Creates a Seed for the counter-based Philox generator

        Args:
            value (int): 64-bit unsigned integer
            spawn_key (tuple[int, ...], optional): path of derivations leading to this seed. Defaults to ().

        Raises:
            TypeError: raised if value is not an integer
            ValueError: raised if value is outside the unsigned 64-bit range
        """
        self._set_value(value)
        self.__spawn_key = tuple(int(k) for k in spawn_key)

    def _get_value(self) -> int:
        return self.__value

    def _set_value(self, value: int) -> None:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise TypeError('Seed value has to be an integer')
        if value < 0 or value > _MAX_SEED:
            raise ValueError('Seed value has to be a 64-bit unsigned integer')
        self.__value = int(value)
    value = property(_get_value, _set_value)

    def _get_spawn_key(self) -> tuple[int, ...]:
        return self.__spawn_key
    spawn_key = property(_get_spawn_key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Seed) and (self.value, self.spawn_key) == (other.value, other.spawn_key)

    def __hash__(self) -> int:
        return hash((self.value, self.spawn_key))

    def __repr__(self) -> str:
        return f'Seed({self.value}, spawn_key={self.spawn_key})'

    def derive(self, *keys: int | str) -> 'Seed':
        """Returns an independent child seed addressed by keys

        Args:
            *keys (int | str): integers or short labels; strings are folded to 64-bit integers through a stable digest

        Returns:
            Seed: child seed, identical for identical (seed, keys)
        """
        folded = []
        for key in keys:
            if isinstance(key, str):
                folded.append(int.from_bytes(hashlib.blake2b(key.encode('utf-8'), digest_size=8).digest(), 'little'))
            else:
                folded.append(int(key))
        return Seed(self.value, self.spawn_key + tuple(folded))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.value, spawn_key=self.spawn_key)
        return np.random.Generator(np.random.Philox(sequence))
