#pragma once

#include "heatlab/criteria.hpp"
#include "heatlab/databuilder.hpp"
#include "heatlab/duhamel.hpp"
#include "heatlab/experiments.hpp"
#include "heatlab/expression.hpp"
#include "heatlab/geometry.hpp"
#include "heatlab/heatkernel.hpp"
#include "heatlab/lower_bound.hpp"
#include "heatlab/nonlinearity.hpp"
#include "heatlab/parallel.hpp"
#include "heatlab/quadrature.hpp"
#include "heatlab/radial.hpp"
#include "heatlab/report.hpp"
