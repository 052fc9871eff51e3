#pragma once

#include "nodalgraph/eigenfunctions.hpp"
#include "nodalgraph/errors.hpp"
#include "nodalgraph/fundamental.hpp"
#include "nodalgraph/graph_io.hpp"
#include "nodalgraph/metric_graph.hpp"
#include "nodalgraph/nodal_analysis.hpp"
#include "nodalgraph/plaplacian.hpp"
#include "nodalgraph/random_graph.hpp"
#include "nodalgraph/report.hpp"
#include "nodalgraph/secular_solver.hpp"
