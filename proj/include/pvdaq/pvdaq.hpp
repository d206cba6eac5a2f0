#pragma once

// Umbrella header: the full acquisition stack.

#include "pvdaq/acquire.hpp"
#include "pvdaq/admin.hpp"
#include "pvdaq/channel_map.hpp"
#include "pvdaq/civil_time.hpp"
#include "pvdaq/clock.hpp"
#include "pvdaq/config.hpp"
#include "pvdaq/convert.hpp"
#include "pvdaq/csv_store.hpp"
#include "pvdaq/daemon.hpp"
#include "pvdaq/fault_script.hpp"
#include "pvdaq/frame.hpp"
#include "pvdaq/hal.hpp"
#include "pvdaq/lockfile.hpp"
#include "pvdaq/log.hpp"
#include "pvdaq/recover.hpp"
#include "pvdaq/rolling.hpp"
#include "pvdaq/scenario.hpp"
#include "pvdaq/sim_backend.hpp"
#include "pvdaq/sink.hpp"
#include "pvdaq/state_file.hpp"
#include "pvdaq/sync.hpp"
#include "pvdaq/verify.hpp"
