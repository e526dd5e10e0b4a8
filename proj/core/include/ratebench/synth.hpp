#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ratebench::synth {

/// Generator settings for a synthetic ratings corpus with the statistical
/// shape of a public benchmark: Zipf item popularity, bursty per-user
/// sessions, user/item bias structure, low-rank latent taste, attribute
/// affinity, an AR(1) per-user mood (the sequential signal), and additive
/// noise, discretized to 1..5 stars. The two presets freeze constants that
/// were calibrated so the classical baselines land on their published
/// reference metrics; counts (users, items, events) are exact by
/// construction, independent of floating-point platform details.
struct SynthSpec {
  std::string kind = "movielens";  // "movielens" | "amazon"
  std::uint64_t seed = 7042001;

  // Population. total_events counts events on catalogued items only; the
  // uncatalogued extras exercise the metadata filter and are dropped there.
  std::size_t n_users = 6040;
  std::size_t n_rated_items = 3689;
  std::size_t n_uncatalogued_items = 11;
  std::size_t n_catalog_extras = 6;
  std::size_t total_events = 980003;
  std::size_t n_uncatalogued_events = 1600;
  std::size_t min_user_events = 20;
  std::size_t max_user_events = 2200;
  double activity_log_mean = 4.35;  // lognormal of events above the minimum
  double activity_log_sd = 1.0;
  double popularity_exponent = 0.9;
  std::size_t n_late_items = 150;  // appear only inside the late window
  double late_window = 0.15;       // fraction of the time range

  // Time range and session texture. Each user becomes a sequence of rating
  // sessions spread over a personal lifespan: most lifespans are short
  // bursts, but a fraction of users (more among heavy raters) keep returning
  // until the end of the range — they are what gives late test events their
  // train-side history.
  std::int64_t t_start = 956700000;
  std::int64_t t_end = 1046400000;
  double join_early_fraction = 0.93;  // users joining inside join_early_window
  double join_early_window = 0.30;
  double join_activity_jitter = 0.22; // rank noise tying high activity to early joins
  double session_gap_s = 420.0;       // intra-session think time scale
  double session_len_mean = 9.0;      // average ratings per session
  double long_life_prob = 0.40;       // chance a user stays until the end
  double long_life_heavy_bonus = 0.45;  // extra chance for the heaviest raters
  double short_life_span = 0.22;      // short lifespans as a range fraction
  double session_density_power = 1.45; // >1 packs sessions early in the lifespan

  // Score model: mu + drift + b_u + b_i + p_u.q_i + affinity + mood + noise.
  double mu = 3.62;
  double user_bias_sd = 0.70;
  double item_bias_sd = 0.69;
  std::size_t latent_rank = 4;
  double latent_sd = 0.35;    // scale of the dot product
  double affinity_sd = 0.25;  // attribute-affinity scale
  double mood_sd = 0.45;
  double mood_rho = 0.92;
  double noise_sd = 0.51;
  double late_drift = -0.15;  // ramps in over the late window
  // Occasional sharp drops ("ordered the wrong thing") with per-user
  // propensity; disabled at 0. This is what gives review-style data its
  // one-star tail under a ceiling-heavy mean.
  double neg_shock_prob = 0.0;     // baseline chance per event
  double neg_shock_scale = 2.0;    // size of the drop, in stars
  double neg_shock_user_sd = 0.0;  // lognormal sigma of per-user propensity

  // Item text.
  std::size_t n_attributes = 18;
  std::size_t max_attrs_per_item = 3;
  std::size_t title_vocab = 900;

  static SynthSpec movielens_replica();
  static SynthSpec amazon_replica();

  /// Same shape at a smaller size, for quick experiments: scales the user,
  /// item, and event counts by `factor` (at least 1 each).
  SynthSpec scaled(double factor) const;

  std::string to_json() const;
  /// Missing keys keep their defaults, so partial overrides are easy.
  static SynthSpec from_json(const std::string& text);
};

struct SynthSummary {
  std::size_t n_users = 0;
  std::size_t n_catalog_records = 0;
  std::size_t n_events = 0;           // catalogued-item events
  std::size_t n_filtered_events = 0;  // events the metadata filter will drop
};

/// Writes `ratings.dat` and `movies.dat` (MovieLens layout, Latin-1 titles)
/// into `dir`, creating it if needed.
SynthSummary write_movielens_files(const SynthSpec& spec,
                                   const std::filesystem::path& dir);

/// Writes `reviews.json` and `meta.json` (Amazon review JSON-lines) into
/// `dir`, creating it if needed.
SynthSummary write_amazon_files(const SynthSpec& spec,
                                const std::filesystem::path& dir);

}  // namespace ratebench::synth
