// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
