// SPDX-FileCopyrightText: 2013-2023 Niels Lohmann <https://nlohmann.me>
// SPDX-License-Identifier: MIT
//
// Shim so sources can use the conventional <nlohmann/json.hpp> include path
// with the flat single-header distribution in vendor/.

#pragma once

// Angle form deliberately skips this directory and resolves via the include
// path, landing on vendor/json.hpp.
#include <json.hpp>
