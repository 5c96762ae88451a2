from ltfbgan.datastore.BundleFile import BundleCatalog, BundleFile, BundleReader, read_bundle, write_bundles
from ltfbgan.datastore.DataStore import AccessCounters, DataStore, Minibatch, OwnershipMap, StoreMode
from ltfbgan.datastore.EpochPlan import EpochPlan, Transfer

__all__ = [
    "AccessCounters",
    "BundleCatalog",
    "BundleFile",
    "BundleReader",
    "DataStore",
    "EpochPlan",
    "Minibatch",
    "OwnershipMap",
    "StoreMode",
    "Transfer",
    "read_bundle",
    "write_bundles",
]
