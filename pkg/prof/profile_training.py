import cProfile
import pstats
import tempfile

from slackbox.synthetic import generate_split
from slackbox.trainer import TrainConfig, train

with tempfile.TemporaryDirectory() as directory:
    generate_split(directory, 32, 0)
    config = TrainConfig(epochs=10, interval_epochs=5, learning_rate=1e-2)
    cProfile.run("train(config, directory)", "prof/train.prof")

stats = pstats.Stats("prof/train.prof")
stats.sort_stats(pstats.SortKey.CUMULATIVE, pstats.SortKey.TIME).print_stats(
    "slackbox", 70
)
stats.sort_stats(pstats.SortKey.CUMULATIVE, pstats.SortKey.TIME).print_stats("numpy", 20)
