#pragma once

// Umbrella header: the full spectral estimation toolkit.

#include "bnspec/bhg_prior.hpp"
#include "bnspec/hpd.hpp"
#include "bnspec/io.hpp"
#include "bnspec/likelihood.hpp"
#include "bnspec/numeric.hpp"
#include "bnspec/sampler.hpp"
#include "bnspec/study.hpp"
#include "bnspec/summary.hpp"
#include "bnspec/timefreq.hpp"
#include "bnspec/var_model.hpp"
