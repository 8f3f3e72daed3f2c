"""Atomic result outputs"""
from src.storage.result_storage import ResultStorage, atomic_write_bytes

__all__ = ["ResultStorage", "atomic_write_bytes"]
