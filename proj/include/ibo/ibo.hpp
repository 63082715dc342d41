#pragma once

#include "ibo/acquisition.hpp"
#include "ibo/bo.hpp"
#include "ibo/common.hpp"
#include "ibo/dataset.hpp"
#include "ibo/gp.hpp"
#include "ibo/kernels.hpp"
#include "ibo/mcmc.hpp"
#include "ibo/mlp.hpp"
#include "ibo/problems.hpp"
#include "ibo/reporting.hpp"
#include "ibo/search_space.hpp"
#include "ibo/trainer.hpp"
