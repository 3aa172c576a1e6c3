#pragma once

#include "dtlmon/errors.hpp"
#include "dtlmon/model.hpp"
#include "dtlmon/simulate.hpp"
#include "dtlmon/logic.hpp"
#include "dtlmon/parser.hpp"
#include "dtlmon/automaton.hpp"
#include "dtlmon/monitor.hpp"
#include "dtlmon/io.hpp"
#include "dtlmon/studies.hpp"
