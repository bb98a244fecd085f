// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "distelect/analysis.hpp"
#include "distelect/cell_store.hpp"
#include "distelect/electoral_college.hpp"
#include "distelect/endpoint.hpp"
#include "distelect/error.hpp"
#include "distelect/pairwise_win.hpp"
#include "distelect/prompt.hpp"
#include "distelect/replay_server.hpp"
#include "distelect/report.hpp"
#include "distelect/share_distribution.hpp"
#include "distelect/tokens.hpp"
