#pragma once

#include "probident/tensor.hpp"
#include "probident/nn.hpp"
#include "probident/data.hpp"
#include "probident/genome.hpp"
#include "probident/fitness.hpp"
#include "probident/evolution.hpp"
#include "probident/identify.hpp"
#include "probident/synth.hpp"
#include "probident/report.hpp"
