#pragma once

// Umbrella header for the whole toolkit.

#include "pcmkit/bitvec.hpp"
#include "pcmkit/config.hpp"
#include "pcmkit/datacon.hpp"
#include "pcmkit/device.hpp"
#include "pcmkit/errors.hpp"
#include "pcmkit/log.hpp"
#include "pcmkit/mneme.hpp"
#include "pcmkit/reneu.hpp"
#include "pcmkit/report.hpp"
#include "pcmkit/rng.hpp"
#include "pcmkit/snn.hpp"
#include "pcmkit/trace.hpp"
#include "pcmkit/version.hpp"
