#include "decay/run.hpp"

#include "decay/errors.hpp"
#include "decay/io.hpp"

namespace decay {

FeedbackMap feedback_from_config(const Config& cfg) {
  const std::string name = cfg.get_string("feedback.name");
  std::map<std::string, double> params;
  for (const char* key : {"p", "q", "c1", "c2", "s0"}) {
    if (cfg.has(std::string("feedback.") + key))
      params[key] = cfg.get_double(std::string("feedback.") + key);
  }
  FeedbackMap map = catalog_feedback(name, params);
  if (map.kind == FeedbackKind::Nonlocal) {
    const std::string chi = cfg.get_string("feedback.chi", "uniform");
    if (chi != "uniform")
      throw ConfigError("feedback.chi: only 'uniform' is supported in config");
  }
  return map;
}

ModelSpec model_from_config(const Config& cfg) {
  ModelSpec spec;
  const std::string kind = cfg.get_string("model.kind");
  if (kind == "wave1d") {
    spec.kind = ModelKind::Wave1D;
  } else if (kind == "transport1d") {
    spec.kind = ModelKind::Transport1D;
  } else if (kind == "schrodinger1d") {
    spec.kind = ModelKind::Schrodinger1D;
  } else if (kind == "beam1d") {
    spec.kind = ModelKind::Beam1D;
  } else if (kind == "custom") {
    spec.kind = ModelKind::Custom;
    spec.A_file = cfg.get_string("model.A_file");
    spec.B_file = cfg.get_string("model.B_file");
    spec.M_file = cfg.get_string("model.M_file");
    spec.V_file = cfg.get_string("model.V_file", "");
  } else {
    throw ConfigError("model.kind: unknown model '" + kind + "'");
  }
  spec.n = cfg.get_int("model.n", 100);
  spec.length = cfg.get_double("model.length", 1.0);
  spec.sigma = cfg.get_double("model.sigma", 2.0);

  if (cfg.has("model.damping.support")) {
    const std::string support = cfg.get_string("model.damping.support");
    if (support != "all") {
      auto vals = cfg.get_double_list("model.damping.support");
      if (vals.size() % 2 != 0)
        throw ConfigError("model.damping.support: expected pairs 'a1,b1[,a2,b2...]'");
      for (std::size_t i = 0; i + 1 < vals.size(); i += 2)
        spec.damping.support.emplace_back(vals[i], vals[i + 1]);
    }
  }
  spec.damping.alpha = cfg.get_double("model.damping.alpha", 1.0);

  const std::string visc = cfg.get_string("model.viscosity", "laplacian_block");
  if (visc == "none") {
    spec.viscosity = ViscosityKind::None;
  } else if (visc == "laplacian_block") {
    spec.viscosity = ViscosityKind::LaplacianBlock;
  } else if (visc == "sqrtAA") {
    spec.viscosity = ViscosityKind::SqrtAA;
    spec.sqrtAA_eps = cfg.get_double("model.sqrtAA_eps", 0.0);
  } else {
    throw ConfigError("model.viscosity: unknown kind '" + visc + "'");
  }

  spec.feedback = feedback_from_config(cfg);
  return spec;
}

TimeScheme scheme_from_config(const Config& cfg, double dx) {
  TimeScheme scheme;
  if (cfg.has("scheme.dt")) {
    scheme.dt = cfg.get_double("scheme.dt");
  } else {
    const std::string rule = cfg.get_string("scheme.dt_rule", "half_dx");
    if (rule == "half_dx") {
      scheme.dt = 0.5 * dx;
    } else {
      throw ConfigError("scheme.dt_rule: unknown rule '" + rule + "'");
    }
  }
  const std::string tv = cfg.get_string("scheme.time_viscosity", "squared");
  if (tv == "none") {
    scheme.time_viscosity = TimeViscosityKind::None;
  } else if (tv == "squared") {
    scheme.time_viscosity = TimeViscosityKind::Squared;
  } else if (tv == "bounded_squared") {
    scheme.time_viscosity = TimeViscosityKind::BoundedSquared;
  } else {
    throw ConfigError("scheme.time_viscosity: unknown kind '" + tv + "'");
  }
  const std::string method = cfg.get_string("scheme.solver.method", "newton");
  if (method == "newton") {
    scheme.solver.method = StageMethod::Newton;
  } else if (method == "fixed_point") {
    scheme.solver.method = StageMethod::FixedPoint;
  } else {
    throw ConfigError("scheme.solver.method: unknown method '" + method + "'");
  }
  scheme.solver.tol = cfg.get_double("scheme.solver.tol", 1e-12);
  scheme.solver.max_iter = cfg.get_int("scheme.solver.max_iter", 50);
  scheme.space_viscosity_in_stage = cfg.get_bool("scheme.space_viscosity_in_stage", true);
  return scheme;
}

InitialDataRule u0_rule_from_config(const Config& cfg) {
  const std::string rule = cfg.get_string("experiment.u0", "smooth");
  if (rule == "smooth") return InitialDataRule::Smooth;
  if (rule == "highfreq") return InitialDataRule::HighFreq;
  if (rule == "random") return InitialDataRule::Random;
  throw ConfigError("experiment.u0: unknown rule '" + rule + "'");
}

EnvelopeVariant envelope_variant_from_config(const Config& cfg) {
  const std::string v = cfg.get_string("experiment.envelope_variant", "space");
  if (v == "continuous") return EnvelopeVariant::Continuous;
  if (v == "space") return EnvelopeVariant::Space;
  if (v == "time") return EnvelopeVariant::Time;
  throw ConfigError("experiment.envelope_variant: unknown variant '" + v + "'");
}

SweepSpec sweep_from_config(const Config& cfg) {
  SweepSpec spec;
  spec.base = model_from_config(cfg);
  spec.meshes = cfg.has("experiment.meshes") ? cfg.get_int_list("experiment.meshes")
                                             : std::vector<int>{64, 128, 256};
  if (cfg.has("scheme.dt")) {
    spec.dt_rule = DtRule::Fixed;
    spec.fixed_dt = cfg.get_double("scheme.dt");
  } else {
    spec.dt_rule = DtRule::HalfDx;
  }
  spec.viscosity_on = cfg.get_bool("experiment.viscosity_on", true);
  spec.u0_rule = u0_rule_from_config(cfg);
  spec.T_final = cfg.get_double("experiment.T_final");
  spec.q = cfg.get_double("experiment.q", 0.5);
  const std::string fit = cfg.get_string("experiment.fit", "algebraic");
  if (fit == "exponential") {
    spec.fit_model = FitModel::Exponential;
  } else if (fit == "algebraic") {
    spec.fit_model = FitModel::Algebraic;
  } else {
    throw ConfigError("experiment.fit: unknown model '" + fit + "'");
  }
  spec.fit_t0_frac = cfg.get_double("experiment.fit_t0_frac", 0.1);
  spec.fit_t1_frac = cfg.get_double("experiment.fit_t1_frac", 1.0);
  spec.solver.tol = cfg.get_double("scheme.solver.tol", 1e-12);
  spec.solver.max_iter = cfg.get_int("scheme.solver.max_iter", 50);
  spec.seed = cfg.get_u64("seed", 1);
  spec.envelope = cfg.get_bool("experiment.envelope", false);
  spec.envelope_T_obs = cfg.get_double("experiment.T_obs", 4.0);
  spec.envelope_variant = envelope_variant_from_config(cfg);
  spec.envelope_onset = cfg.get_double("experiment.onset", 1.0);
  return spec;
}

std::string manifest_hash_for(const Config& cfg) {
  return hash_hex(fnv1a64(cfg.canonical_text()));
}

}  // namespace decay
