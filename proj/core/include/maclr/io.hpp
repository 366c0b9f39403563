// Copyright 2026 The maclr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MACLR_IO_HPP_
#define MACLR_IO_HPP_

#include <filesystem>
#include <functional>
#include <ostream>

namespace maclr {

// Writes through a sibling temp file and renames it over `path`, so readers
// never observe a partial file. The temp file is removed if `writer` throws.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

}  // namespace maclr

#endif  // MACLR_IO_HPP_
