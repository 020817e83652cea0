#pragma once

#include "narrow_node/constants.hpp"
#include "narrow_node/csv.hpp"
#include "narrow_node/error.hpp"
#include "narrow_node/experiments.hpp"
#include "narrow_node/integrate.hpp"
#include "narrow_node/model.hpp"
#include "narrow_node/weights_io.hpp"
