#pragma once

#include "teamlq/linalg.hpp"
#include "teamlq/core.hpp"
#include "teamlq/sdp.hpp"
#include "teamlq/radner.hpp"
#include "teamlq/constrained.hpp"
#include "teamlq/minimax.hpp"
#include "teamlq/oracle.hpp"
#include "teamlq/io.hpp"
