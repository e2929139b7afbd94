#pragma once

#include "lobnet/core.hpp"
#include "lobnet/fitnessmodel.hpp"
#include "lobnet/io.hpp"
#include "lobnet/matchengine.hpp"
#include "lobnet/orderflow.hpp"
#include "lobnet/parallel.hpp"
#include "lobnet/pipeline.hpp"
#include "lobnet/plfit.hpp"
#include "lobnet/random.hpp"
#include "lobnet/synthgen.hpp"
#include "lobnet/tradenet.hpp"
#include "lobnet/tradestats.hpp"
