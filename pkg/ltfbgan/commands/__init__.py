from ltfbgan.commands.bench_datastore import bench_datastore
from ltfbgan.commands.compare import compare
from ltfbgan.commands.generate_data import ensure_dataset, generate_data
from ltfbgan.commands.train import train

__all__ = ["bench_datastore", "compare", "ensure_dataset", "generate_data", "train"]
