"""Streaming mining of similar item pairs from transactions in random order."""

__version__ = "0.1.0"

from simstream.measures import Measure, similarity, weight_f
from simstream.miner import ChunkPlan, MinerConfig, SimilarityMiner, detection_threshold, plan_chunks
from simstream.samplecount import SimilarityEstimate, estimate_similarity, merge_top
from simstream.sampler import PairSampler, SampledPair, round_down, sample_transaction, sample_uniform_subset
from simstream.stream import CountTable, PrefixState, make_transaction

__all__ = [
    "ChunkPlan",
    "CountTable",
    "Measure",
    "MinerConfig",
    "PairSampler",
    "PrefixState",
    "SampledPair",
    "SimilarityEstimate",
    "SimilarityMiner",
    "detection_threshold",
    "estimate_similarity",
    "make_transaction",
    "merge_top",
    "plan_chunks",
    "round_down",
    "sample_transaction",
    "sample_uniform_subset",
    "similarity",
    "weight_f",
]
