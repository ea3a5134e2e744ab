# Copyright 2026 The dnsexfil Authors.
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

"""Python bindings for the dnsexfil detection core."""

from ._dnsexfil import (
    Error,
    Model,
    detect,
    ldh_entropy,
    path_adjustment,
    primary_domain,
    simulate,
    train,
    window_features,
)

FEATURES = ("ent", "ni", "uniq", "vol", "len", "lmw")


def config_text(**values):
    """Renders keyword arguments as a key = value run config."""
    lines = []
    for key, value in values.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


__all__ = [
    "Error",
    "FEATURES",
    "Model",
    "config_text",
    "detect",
    "ldh_entropy",
    "path_adjustment",
    "primary_domain",
    "simulate",
    "train",
    "window_features",
]
