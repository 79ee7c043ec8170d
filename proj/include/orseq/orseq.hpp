#ifndef ORSEQ_ORSEQ_HPP
#define ORSEQ_ORSEQ_HPP

// Operator renewal sequences for infinite-measure interval maps: umbrella
// header pulling in the full toolkit.

#include "orseq/cache.hpp"
#include "orseq/common.hpp"
#include "orseq/density.hpp"
#include "orseq/fft.hpp"
#include "orseq/induced.hpp"
#include "orseq/io.hpp"
#include "orseq/limits.hpp"
#include "orseq/maps.hpp"
#include "orseq/renewal_ops.hpp"
#include "orseq/rng.hpp"
#include "orseq/scalar.hpp"
#include "orseq/special.hpp"
#include "orseq/spectral.hpp"
#include "orseq/stochastic.hpp"

#endif
