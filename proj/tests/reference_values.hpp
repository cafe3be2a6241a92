// Copyright 2026 The Sparsify Authors.
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

#pragma once

namespace sparsify::reference {

// Schedule values at t = 0, 0.1, ..., 1 for s = 100, evaluated independently
// at 40 significant digits.
inline constexpr double kGradual[] = {0.0,  27.1, 48.8, 65.7, 78.4, 87.5,
                                      93.6, 97.3, 99.2, 99.9, 100.0};
inline constexpr double kOneCycle[] = {0.24734526292967116396, 0.995514032451095842,
                                       3.9178861433057462546,  14.189865063149007699,
                                       40.144696517969638251,  73.130382146194277577,
                                       91.713486480264455194,  97.84468513431219567,
                                       99.484732328020583822,  99.897648694480092424,
                                       100.0};
inline constexpr double kDsd[] = {0.0,
                                  9.5491502812526287949,
                                  34.549150281252628795,
                                  65.450849718747371205,
                                  90.450849718747371205,
                                  100.0,
                                  90.450849718747371205,
                                  65.450849718747371205,
                                  34.549150281252628795,
                                  9.5491502812526287949,
                                  0.0};
inline constexpr double kIterative[] = {0, 20, 20, 40, 40, 60, 60, 80, 80, 100, 100};

}  // namespace sparsify::reference
