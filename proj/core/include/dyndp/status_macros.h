// Copyright 2026 The DynDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNDP_STATUS_MACROS_H_
#define DYNDP_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define DYNDP_STATUS_CONCAT_INNER_(a, b) a##b
#define DYNDP_STATUS_CONCAT_(a, b) DYNDP_STATUS_CONCAT_INNER_(a, b)

#define DYNDP_RETURN_IF_ERROR(expr)                 \
  do {                                              \
    const absl::Status dyndp_status_ = (expr);      \
    if (!dyndp_status_.ok()) return dyndp_status_;  \
  } while (false)

#define DYNDP_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                 \
  if (!statusor.ok()) return statusor.status();            \
  lhs = *std::move(statusor)

#define DYNDP_ASSIGN_OR_RETURN(lhs, rexpr)                                   \
  DYNDP_ASSIGN_OR_RETURN_IMPL_(                                              \
      DYNDP_STATUS_CONCAT_(dyndp_statusor_, __LINE__), lhs, rexpr)

#endif  // DYNDP_STATUS_MACROS_H_
