// Copyright 2026 The dnsexfil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DNSEXFIL_BUNDLED_DATA_H_
#define DNSEXFIL_BUNDLED_DATA_H_

#include <string_view>

namespace dnsexfil {

// Snapshots of data/public_suffix_list.dat and data/words.txt compiled into
// the library so the CLI and Python module work without a data directory.
std::string_view BundledPublicSuffixText();
std::string_view BundledWordlistText();

}  // namespace dnsexfil

#endif  // DNSEXFIL_BUNDLED_DATA_H_
