#pragma once

#include "blade/behavior.hpp"
#include "blade/bundle.hpp"
#include "blade/config.hpp"
#include "blade/core.hpp"
#include "blade/ecdf.hpp"
#include "blade/hdbscan.hpp"
#include "blade/ingest.hpp"
#include "blade/latent.hpp"
#include "blade/metrics.hpp"
#include "blade/nn/autoencoder.hpp"
#include "blade/ocsvm.hpp"
#include "blade/pipeline.hpp"
#include "blade/rng.hpp"
#include "blade/synth.hpp"
#include "blade/types.hpp"
