#pragma once

#include <string>

#include "decay/analysis.hpp"
#include "decay/config.hpp"
#include "decay/models.hpp"

namespace decay {

/// Translate the flat config sections into build inputs. Throws ConfigError
/// naming the offending key.
FeedbackMap feedback_from_config(const Config& cfg);
ModelSpec model_from_config(const Config& cfg);
TimeScheme scheme_from_config(const Config& cfg, double dx);
InitialDataRule u0_rule_from_config(const Config& cfg);
SweepSpec sweep_from_config(const Config& cfg);
EnvelopeVariant envelope_variant_from_config(const Config& cfg);

/// Canonical config text + seed, hashed; every output file carries this.
std::string manifest_hash_for(const Config& cfg);

}  // namespace decay
