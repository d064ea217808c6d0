/* Copyright 2026 The rcnn-mps Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rcnn/cli.hpp"
#include "rcnn/metrics.hpp"
#include "rcnn/simulate.hpp"
#include "rcnn/train.hpp"

namespace rcnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSectorNames{"ti", "s1", "s2", "s3"};

std::uint64_t sector_index(const std::string& name) {
  for (std::size_t i = 0; i < kSectorNames.size(); ++i)
    if (kSectorNames[i] == name) return i;
  throw ConfigError("unknown sector '" + name + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

// Runs `body` inside <out>/<name>.staging and renames it into place on
// success; a failed stage is moved to <out>/<name>.failed.
template <class F>
void run_stage(const RunConfig& config, const std::string& name, F body) {
  config.validate();
  const fs::path final_dir = config.out / name;
  const fs::path staging = config.out / (name + ".staging");
  const fs::path failed = config.out / (name + ".failed");
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    write_text(staging / "config.ini", to_ini(config));
    body(staging);
  } catch (const std::exception& e) {
    fs::remove_all(failed);
    fs::rename(staging, failed);
    throw StageError(fmt::format("{}: {} (partial output in {})", name, e.what(), failed.string()));
  }
  fs::remove_all(final_dir);
  fs::remove_all(failed);
  fs::rename(staging, final_dir);
  spdlog::info("{}: wrote {}", name, final_dir.string());
}

CategoricalGrid load_sector(const RunConfig& config, const std::string& name) {
  return load_grid(config.out / "ti" / (name + ".gslib"), config.sector_dims(), 2);
}

CategoricalGrid load_domain(const RunConfig& config, const std::string& name) {
  return domain_crop(load_sector(config, name), config.domain_dims());
}

fs::path sample_path(const RunConfig& config, const std::string& sector, double fraction) {
  return config.out / "samples" / fmt::format("{}_{}.csv", sector, fraction_label(fraction));
}

std::string fmt_real(double v) { return fmt::format("{:.17g}", v); }

std::string variogram_csv(const std::vector<VariogramResult>& results) {
  std::string out = "direction,lag,gamma,pairs\n";
  for (const auto& r : results)
    for (const auto& l : r.lags) {
      out += fmt::format("{},{},{},{}\n", to_string(r.direction), l.lag, fmt_real(l.gamma), l.pairs);
    }
  return out;
}

}  // namespace

CategoricalGrid domain_crop(const CategoricalGrid& sector, Dims3 domain) {
  const Index3 origin{(sector.nx() - domain.nx) / 2, (sector.ny() - domain.ny) / 2,
                      (sector.nz() - domain.nz) / 2};
  return crop(sector, origin, domain);
}

std::string fraction_label(double fraction) { return fmt::format("{}", fraction); }

void cmd_gen_ti(const RunConfig& config) {
  run_stage(config, "ti", [&](const fs::path& dir) {
    auto params = config.synth;
    params.seed = stage_seed(config, "gen-ti");
    const auto model = build_surface_model(params);
    const auto sectors = split_sectors(model.grid);
    save_grid(model.grid, dir / "field.gslib", "synthetic field");
    save_grid(sectors.ti, dir / "ti.gslib", "training image");
    save_grid(sectors.s1, dir / "s1.gslib", "sector s1");
    save_grid(sectors.s2, dir / "s2.gslib", "sector s2");
    save_grid(sectors.s3, dir / "s3.gslib", "sector s3");

    json sector_props;
    for (const auto& [name, grid] : {std::pair{"ti", &sectors.ti}, {"s1", &sectors.s1},
                                     {"s2", &sectors.s2}, {"s3", &sectors.s3}}) {
      sector_props[name] = proportions(*grid)[1];
    }
    write_json(dir / "params.json",
               {{"seed", config.seed},
                {"generator_seed", params.seed},
                {"field_dims", {params.dims.nx, params.dims.ny, params.dims.nz}},
                {"n_surfaces", params.n_surfaces},
                {"cosines", {params.min_cosines, params.max_cosines}},
                {"amplitude", {params.min_amplitude, params.max_amplitude}},
                {"wavelength", {params.min_wavelength, params.max_wavelength}},
                {"target_proportion", params.target_proportion ? json(*params.target_proportion) : json()},
                {"offset", model.offset},
                {"minority_proportion", model.minority_proportion},
                {"sector_minority_proportion", sector_props}});
  });
}

void cmd_sample(const RunConfig& config) {
  run_stage(config, "samples", [&](const fs::path& dir) {
    json summary = json::array();
    for (const auto& sector : config.sectors) {
      const auto grid = load_domain(config, sector);
      for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        const double fraction = config.fractions[f];
        const auto holes =
            sample_drillholes(grid, fraction, stage_seed(config, "sample-" + sector, f));
        const auto file = fmt::format("{}_{}.csv", sector, fraction_label(fraction));
        save_drillholes_csv(holes, dir / file);
        summary.push_back({{"sector", sector},
                           {"fraction", fraction},
                           {"nodes", holes.samples.size()},
                           {"file", file}});
      }
    }
    write_json(dir / "samples.json", summary);
  });
}

void cmd_train(const RunConfig& config) {
  run_stage(config, "train", [&](const fs::path& dir) {
    const auto ti = load_domain(config, "ti");
    const auto rc = training_config(config);
    RCNNModel model;
    if (config.resume.empty()) {
      model = make_model(rc);
    } else {
      model = load_checkpoint(config.resume);
      auto stored = model.config;
      stored.epochs = rc.epochs;
      if (to_json(stored) != to_json(rc)) {
        throw std::runtime_error("checkpoint " + config.resume + " was trained with another config");
      }
      model.config.epochs = rc.epochs;
      spdlog::info("resuming from epoch {}", model.epochs_completed);
    }
    TrainHooks hooks;
    if (config.checkpoint_every_epoch) {
      hooks.on_epoch = [&dir](const RCNNModel& m) {
        save_checkpoint(m, dir / fmt::format("epoch_{:03}.ckpt", m.epochs_completed));
      };
    }
    resume_training(model, ti, hooks);
    save_checkpoint(model, dir / "model.ckpt");

    std::string csv = "epoch,cnn_index,mean_loss\n";
    for (const auto& e : model.log) csv += fmt::format("{},{},{}\n", e.epoch, e.cnn_index, fmt_real(e.mean_loss));
    write_text(dir / "loss.csv", csv);
    write_json(dir / "training.json", {{"epochs_completed", model.epochs_completed},
                                       {"converged", model.converged},
                                       {"seed", rc.seed},
                                       {"config", to_json(model.config)}});
  });
}

void cmd_simulate(const RunConfig& config) {
  const auto model = load_checkpoint(config.out / "train" / "model.ckpt");
  run_stage(config, "sim", [&](const fs::path& dir) {
    json manifest = json::array();
    for (const auto& sector : config.sectors) {
      SimulationJob job;
      job.model = &model;
      job.hard_data = load_drillholes_csv(sample_path(config, sector, config.sim_fraction), 2);
      job.dims = config.domain_dims();
      job.realizations = config.realizations;
      job.base_seed = stage_seed(config, "simulate", sector_index(sector));
      job.options = {model.config.freeze_fraction, model.config.assignment};
      job.jobs = config.jobs;
      const auto ensemble = run_ensemble(job);
      fs::create_directories(dir / sector);
      for (int r = 0; r < config.realizations; ++r) {
        const auto file = fmt::format("{}/real_{}.gslib", sector, r);
        save_grid(ensemble.realizations[r], dir / file, fmt::format("{} realization {}", sector, r));
        manifest.push_back({{"sector", sector},
                            {"realization", r},
                            {"seed", job.base_seed + static_cast<std::uint64_t>(r)},
                            {"file", file}});
      }
      spdlog::info("simulate: {} realizations for {}", config.realizations, sector);
    }
    write_json(dir / "manifest.json", manifest);
  });
}

void cmd_metrics(const RunConfig& config) {
  const auto manifest = read_json(config.out / "sim" / "manifest.json");
  run_stage(config, "metrics", [&](const fs::path& dir) {
    const Dims3 dims = config.domain_dims();
    const int cat = config.category;
    const int other = cat == 1 ? 2 : 1;
    const int lag_h = config.max_lag_horizontal > 0 ? config.max_lag_horizontal
                                                    : default_max_lag(dims, Direction::OmniHorizontal);
    const int lag_v = config.max_lag_vertical > 0 ? config.max_lag_vertical
                                                  : default_max_lag(dims, Direction::Vertical);
    auto variograms = [&](const CategoricalGrid& g) {
      return std::vector<VariogramResult>{indicator_variogram(g, cat, Direction::OmniHorizontal, lag_h),
                                          indicator_variogram(g, cat, Direction::Vertical, lag_v)};
    };
    auto mean_sill = [](const std::vector<VariogramResult>& v) { return 0.5 * (v[0].sill() + v[1].sill()); };

    const auto ti = load_domain(config, "ti");
    const auto ti_vario = variograms(ti);
    json summary;
    summary["ti"] = {{"proportion", proportions(ti)[cat - 1]}, {"sill", mean_sill(ti_vario)}};
    summary["max_lag"] = {{"omni_horizontal", lag_h}, {"vertical", lag_v}};

    for (const auto& sector : config.sectors) {
      const fs::path out = dir / sector;
      fs::create_directories(out);
      write_text(out / "variogram_ti.csv", variogram_csv(ti_vario));
      const auto gt = load_domain(config, sector);
      const auto gt_vario = variograms(gt);
      write_text(out / "variogram_gt.csv", variogram_csv(gt_vario));

      Ensemble ensemble;
      for (const auto& entry : manifest) {
        if (entry.at("sector").get<std::string>() != sector) continue;
        ensemble.realizations.push_back(
            load_grid(config.out / "sim" / entry.at("file").get<std::string>(), dims, 2));
      }
      if (ensemble.size() == 0) throw std::runtime_error("no realizations for sector " + sector);

      std::vector<double> sills, props;
      for (std::size_t r = 0; r < ensemble.size(); ++r) {
        const auto v = variograms(ensemble.realizations[r]);
        write_text(out / fmt::format("variogram_real_{}.csv", r), variogram_csv(v));
        sills.push_back(mean_sill(v));
        props.push_back(proportions(ensemble.realizations[r])[cat - 1]);
      }

      const auto et = etype(ensemble, cat);
      const auto var = variance_map(ensemble, cat);
      save_real_map(et, out / "etype.gslib", sector + " E-type", fmt::format("p(category {})", cat));
      save_real_map(var, out / "variance.gslib", sector + " local variance", "variance");

      const auto thresholded = threshold_map(et, dims, cat, other);
      const auto et_h = indicator_variogram(thresholded, cat, Direction::OmniHorizontal, lag_h);
      const auto et_v = indicator_variogram(thresholded, cat, Direction::Vertical, lag_v);

      const auto hard = migrate_hard_data(CategoricalGrid(dims, 2),
                                          load_drillholes_csv(sample_path(config, sector, config.sim_fraction), 2))
                            .grid;
      std::size_t hard_nodes = 0, violations = 0;
      double hard_var = 0.0;
      for (std::size_t i = 0; i < hard.size(); ++i) {
        if (hard[i] == kUnknown) continue;
        ++hard_nodes;
        hard_var = std::max(hard_var, var[i]);
        for (const auto& r : ensemble.realizations) violations += r[i] != hard[i];
      }

      const auto [smin, smax] = std::minmax_element(sills.begin(), sills.end());
      double smean = 0.0, pmean = 0.0;
      for (double s : sills) smean += s / static_cast<double>(sills.size());
      for (double p : props) pmean += p / static_cast<double>(props.size());
      auto gamma_at = [](const VariogramResult& v, int lag) { return lag <= static_cast<int>(v.lags.size()) ? json(v.at(lag)) : json(); };
      summary["sectors"][sector] = {
          {"realizations", ensemble.size()},
          {"gt", {{"proportion", proportions(gt)[cat - 1]}, {"sill", mean_sill(gt_vario)}}},
          {"realization_sill", {{"min", *smin}, {"max", *smax}, {"mean", smean}}},
          {"realization_proportion_mean", pmean},
          {"etype_gamma3", {{"omni_horizontal", gamma_at(et_h, 3)}, {"vertical", gamma_at(et_v, 3)}}},
          {"conditioning", {{"hard_nodes", hard_nodes},
                            {"violations", violations},
                            {"max_variance_at_hard_nodes", hard_var}}}};
    }
    write_json(dir / "summary.json", summary);
  });
}

}  // namespace rcnn::cli
