// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace nextsense::data {

extern const std::string_view kTdlaTable;
extern const std::string_view kTdlbTable;
extern const std::string_view kTdlcTable;
extern const std::string_view kMcsTable;

} // namespace nextsense::data
