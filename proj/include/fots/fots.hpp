#pragma once

#include "fots/access.hpp"
#include "fots/calibration.hpp"
#include "fots/channel.hpp"
#include "fots/errors.hpp"
#include "fots/io.hpp"
#include "fots/protocol.hpp"
#include "fots/random.hpp"
#include "fots/scenario.hpp"
#include "fots/stability.hpp"
#include "fots/timebase.hpp"
#include "fots/version.hpp"
