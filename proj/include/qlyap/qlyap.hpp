#pragma once

// Umbrella header for the qlyap library.

#include "qlyap/analysis.hpp"
#include "qlyap/config.hpp"
#include "qlyap/control.hpp"
#include "qlyap/propagate.hpp"
#include "qlyap/qla.hpp"
#include "qlyap/system.hpp"
