#pragma once

#include "pvar/bounds.hpp"
#include "pvar/distribution.hpp"
#include "pvar/dpo.hpp"
#include "pvar/errors.hpp"
#include "pvar/estimator.hpp"
#include "pvar/io.hpp"
#include "pvar/random.hpp"
#include "pvar/selection.hpp"
#include "pvar/synthetic.hpp"
#include "pvar/tabular_policy.hpp"
#include "pvar/types.hpp"
