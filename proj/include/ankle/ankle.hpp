#pragma once

#include "ankle/actuator.hpp"
#include "ankle/errors.hpp"
#include "ankle/geometry.hpp"
#include "ankle/io.hpp"
#include "ankle/mechkin.hpp"
#include "ankle/metrics.hpp"
#include "ankle/nsga2.hpp"
#include "ankle/optimizer.hpp"
#include "ankle/pipeline.hpp"
#include "ankle/ranking.hpp"
#include "ankle/reparam.hpp"
