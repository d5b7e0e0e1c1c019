# Copyright 2026 The Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Token merging with attention: selection, merge/unmerge, locality, cost model.

Token arrays are float32 numpy arrays of shape (N, d).
"""

import json

from toma._core import (
    DataError,
    InvalidArgument,
    MergeWeights,
    NumericalError,
    TomaError,
    apply_merge,
    cosine_similarity,
    cost_report_json,
    drift_sequence,
    facility_location_value,
    generate_field,
    greedy_select,
    hard_merge_weights,
    local_pipeline,
    merge_weights,
    orthogonality_error,
    pseudo_inverse,
    read_tensor_file,
    run_report_json,
    set_num_threads,
    unmerge,
    valid_region_counts,
    write_tensor_file,
)

__version__ = "0.1.0"


def select_destinations(x, budget):
    """Greedy facility-location destinations for the tokens in x."""
    return greedy_select(cosine_similarity(x), budget)


def cost_report(n, dim, ratio, tiles=1, with_adds=False):
    """Multiplication counts and speedups as a dict."""
    return json.loads(cost_report_json(n, dim, ratio, tiles, with_adds))


def run_report(states, **kwargs):
    """Full pipeline report over a list of per-step arrays, as a dict."""
    return json.loads(run_report_json(list(states), **kwargs))


__all__ = [
    "DataError",
    "InvalidArgument",
    "MergeWeights",
    "NumericalError",
    "TomaError",
    "apply_merge",
    "cosine_similarity",
    "cost_report",
    "drift_sequence",
    "facility_location_value",
    "generate_field",
    "greedy_select",
    "hard_merge_weights",
    "local_pipeline",
    "merge_weights",
    "orthogonality_error",
    "pseudo_inverse",
    "read_tensor_file",
    "run_report",
    "select_destinations",
    "set_num_threads",
    "unmerge",
    "valid_region_counts",
    "write_tensor_file",
]
