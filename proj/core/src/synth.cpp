#include "ratebench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ratebench/kernel/rng.hpp"

namespace ratebench::synth {

namespace {

using kernel::Rng;

// One flat field list drives both JSON directions.
#define RATEBENCH_SYNTH_FIELDS(X)                                              \
  X(kind)                                                                      \
  X(seed)                                                                      \
  X(n_users)                                                                   \
  X(n_rated_items)                                                             \
  X(n_uncatalogued_items)                                                      \
  X(n_catalog_extras)                                                          \
  X(total_events)                                                              \
  X(n_uncatalogued_events)                                                     \
  X(min_user_events)                                                           \
  X(max_user_events)                                                           \
  X(activity_log_mean)                                                         \
  X(activity_log_sd)                                                           \
  X(popularity_exponent)                                                       \
  X(n_late_items)                                                              \
  X(late_window)                                                               \
  X(t_start)                                                                   \
  X(t_end)                                                                     \
  X(join_early_fraction)                                                       \
  X(join_early_window)                                                         \
  X(join_activity_jitter)                                                      \
  X(neg_shock_prob)                                                            \
  X(neg_shock_scale)                                                           \
  X(neg_shock_user_sd)                                                         \
  X(session_gap_s)                                                             \
  X(session_len_mean)                                                          \
  X(long_life_prob)                                                            \
  X(long_life_heavy_bonus)                                                     \
  X(short_life_span)                                                           \
  X(session_density_power)                                                     \
  X(mu)                                                                        \
  X(user_bias_sd)                                                              \
  X(item_bias_sd)                                                              \
  X(latent_rank)                                                               \
  X(latent_sd)                                                                 \
  X(affinity_sd)                                                               \
  X(mood_sd)                                                                   \
  X(mood_rho)                                                                  \
  X(noise_sd)                                                                  \
  X(late_drift)                                                                \
  X(n_attributes)                                                              \
  X(max_attrs_per_item)                                                        \
  X(title_vocab)

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Zero-mean, unit-variance-ish deterministic value from a hash; used for
/// user-attribute affinity so no table of n_users x n_attributes is stored.
double hash_unit(std::uint64_t a, std::uint64_t b) {
  const double u =
      static_cast<double>(splitmix64(a ^ (b + 1) * 0x9E3779B97F4A7C15ULL) >> 11) *
      0x1.0p-53;
  return (u - 0.5) * 3.4641016151377544;  // sqrt(12)
}

std::string make_word(Rng& rng) {
  static const char* const heads[] = {"b",  "br", "c",  "cl", "cr", "d",  "dr", "f",
                                      "fl", "g",  "gr", "h",  "j",  "k",  "l",  "m",
                                      "n",  "p",  "qu", "r",  "s",  "sh", "st", "t",
                                      "th", "v",  "w",  "z"};
  static const char* const cores[] = {"a",  "e",  "i",  "o",  "u",  "ai", "ea",
                                      "ee", "ie", "oa", "oo", "ou", "ar", "er",
                                      "ir", "or", "an", "en", "in", "on"};
  static const char* const tails[] = {"",    "n",    "r",    "s",    "l",    "t",
                                      "th",  "nd",   "st",   "ck",   "m",    "x",
                                      "ver", "ton",  "ley",  "dale", "wood", "mark",
                                      "gate", "brook"};
  std::string w = heads[rng.below(std::size(heads))];
  w += cores[rng.below(std::size(cores))];
  if (rng.uniform01() < 0.35) {
    w += heads[rng.below(std::size(heads))];
    w += cores[rng.below(std::size(cores))];
  }
  w += tails[rng.below(std::size(tails))];
  w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::vector<std::string> make_wordlist(Rng& rng, std::size_t n) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  words.reserve(n);
  while (words.size() < n) {
    std::string w = make_word(rng);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::vector<std::string> attribute_names(const SynthSpec& s, Rng& rng) {
  static const char* const kGenres[] = {
      "Action",  "Adventure", "Animation", "Children's", "Comedy",   "Crime",
      "Documentary", "Drama", "Fantasy",   "Film-Noir",  "Horror",   "Musical",
      "Mystery", "Romance",   "Sci-Fi",    "Thriller",   "War",      "Western"};
  std::vector<std::string> names;
  names.reserve(s.n_attributes);
  if (s.kind == "movielens") {
    for (std::size_t a = 0; a < s.n_attributes && a < std::size(kGenres); ++a) {
      names.emplace_back(kGenres[a]);
    }
    while (names.size() < s.n_attributes) {
      names.push_back(make_word(rng) + " Films");
    }
  } else {
    static const char* const kSuffixes[] = {" Press", " Books", " House", " Media"};
    std::unordered_set<std::string> seen;
    while (names.size() < s.n_attributes) {
      std::string b = make_word(rng) + kSuffixes[rng.below(std::size(kSuffixes))];
      if (seen.insert(b).second) names.push_back(std::move(b));
    }
  }
  return names;
}

struct ItemState {
  std::vector<std::uint32_t> attrs;
  std::string title;
  double bias = 0.0;
  std::vector<double> latent;
  double weight = 0.0;
  double avail01 = 0.0;  // availability start as a fraction of the time range
  std::uint32_t count = 0;
};

struct UserState {
  std::int64_t join = 0;
  std::uint32_t n_events = 0;
  std::uint32_t n_uncat = 0;
  double bias = 0.0;
  double shock_p = 0.0;
  std::vector<double> latent;
};

struct GenEvent {
  std::uint32_t user_index;
  std::uint32_t item_index;
  std::uint8_t rating;
  std::int64_t timestamp;
};

struct Generated {
  std::vector<std::string> attr_names;
  std::vector<ItemState> items;  // rated, then extras, then uncatalogued
  std::vector<GenEvent> events;  // grouped by user, chronological per user
  std::size_t n_rated = 0;
  std::size_t n_extras = 0;
  std::size_t n_uncat = 0;
};

/// Event times for one user: a lifespan (short burst or returning-user),
/// session starts packed towards its beginning, think-time gaps inside each
/// session. Ascending by construction.
std::vector<std::int64_t> plan_times(Rng& rng, const SynthSpec& s, std::int64_t join,
                                     bool heavy_user, std::size_t n_slots,
                                     std::int64_t t_cap) {
  const double range = static_cast<double>(s.t_end - s.t_start);
  const double join01 = static_cast<double>(join - s.t_start) / range;
  const double tail = std::max(0.02, 1.0 - join01);
  const double p_long = std::min(
      1.0, s.long_life_prob + (heavy_user ? s.long_life_heavy_bonus : 0.0));
  double life01;
  if (rng.uniform01() < p_long) {
    // Skewed towards full tenure so the closing stretch of the range still
    // sees plenty of long-established accounts.
    life01 = tail * (0.35 + 0.65 * std::pow(rng.uniform01(), 0.45));
  } else {
    life01 = std::min(tail, s.short_life_span * (0.15 + rng.uniform01()));
  }
  const double life_s = std::max(3600.0, life01 * range);

  const double mean_len =
      std::max(1.0, s.session_len_mean * (0.6 + 0.8 * rng.uniform01()));
  const auto n_sessions = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(static_cast<double>(n_slots) / mean_len)));
  std::vector<double> starts(n_sessions);
  for (double& v : starts) {
    v = std::pow(rng.uniform01(), s.session_density_power) * life_s;
  }
  std::sort(starts.begin(), starts.end());

  std::vector<std::int64_t> times;
  times.reserve(n_slots);
  const std::size_t base = n_slots / n_sessions;
  std::size_t extra = n_slots % n_sessions;
  std::int64_t t = join;
  for (std::size_t k = 0; k < n_sessions; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    t = std::max(t + 60, join + static_cast<std::int64_t>(starts[k]));
    for (std::size_t e = 0; e < len; ++e) {
      times.push_back(std::min(t, t_cap));
      t += 15 + static_cast<std::int64_t>(s.session_gap_s * rng.uniform01());
    }
  }
  return times;
}

void validate(const SynthSpec& s) {
  if (s.kind != "movielens" && s.kind != "amazon") {
    throw std::invalid_argument("unknown synth kind: " + s.kind);
  }
  if (s.n_users == 0 || s.n_rated_items == 0 || s.total_events == 0) {
    throw std::invalid_argument("synth spec needs users, items and events");
  }
  if (s.min_user_events == 0 || s.max_user_events < s.min_user_events) {
    throw std::invalid_argument("synth spec has an impossible activity range");
  }
  if (s.n_users * s.min_user_events > s.total_events ||
      s.n_users * s.max_user_events < s.total_events) {
    throw std::invalid_argument(
        "total_events is unreachable with the configured per-user bounds");
  }
  if (s.total_events > s.n_users * s.n_rated_items) {
    throw std::invalid_argument("more events than distinct (user,item) pairs");
  }
  if (s.t_end <= s.t_start) throw std::invalid_argument("empty time range");
  if (s.mood_rho < 0.0 || s.mood_rho >= 1.0) {
    throw std::invalid_argument("mood_rho outside [0,1)");
  }
  if (s.neg_shock_prob < 0.0 || s.neg_shock_prob > 0.6 ||
      s.neg_shock_scale < 0.0 || s.neg_shock_user_sd < 0.0) {
    throw std::invalid_argument("negative-shock parameters out of range");
  }
  if (s.n_attributes == 0 || s.max_attrs_per_item == 0) {
    throw std::invalid_argument("items need at least one attribute slot");
  }
}

std::string render_title(const SynthSpec& s, Rng& rng,
                         const std::vector<std::vector<std::uint32_t>>& pools,
                         const std::vector<std::string>& words,
                         const std::vector<std::uint32_t>& attrs) {
  const std::size_t n_words =
      s.kind == "movielens" ? 1 + rng.below(4) : 2 + rng.below(5);
  std::string title;
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::vector<std::uint32_t>* pool = &pools.back();  // shared pool
    if (!attrs.empty() && rng.uniform01() < 0.6) {
      const auto& attr_pool = pools[attrs[rng.below(attrs.size())]];
      if (!attr_pool.empty()) pool = &attr_pool;
    }
    if (pool->empty()) pool = &pools.back();
    if (!title.empty()) title += ' ';
    title += words[(*pool)[rng.below(pool->size())]];
  }
  if (s.kind == "movielens") {
    const int year = 2000 - static_cast<int>(70.0 * std::pow(rng.uniform01(), 2.0));
    title += " (" + std::to_string(year) + ")";
  }
  return title;
}

Generated generate(const SynthSpec& s) {
  validate(s);
  Rng rng(s.seed);
  Generated g;
  g.n_rated = s.n_rated_items;
  g.n_extras = s.n_catalog_extras;
  g.n_uncat = s.n_uncatalogued_items;

  g.attr_names = attribute_names(s, rng);
  const std::vector<std::string> words =
      make_wordlist(rng, std::max<std::size_t>(s.title_vocab, s.n_attributes + 20));

  // Word pools: one per attribute plus a shared one at the back.
  std::vector<std::vector<std::uint32_t>> pools(s.n_attributes + 1);
  for (std::uint32_t w = 0; w < words.size(); ++w) {
    pools[w % (s.n_attributes + 1)].push_back(w);
  }

  // Popularity ranks are a random permutation; a mid-popularity band becomes
  // the late cohort so every late item still gathers plenty of events.
  std::vector<std::uint32_t> rank(g.n_rated);
  for (std::uint32_t i = 0; i < rank.size(); ++i) rank[i] = i;
  rng.shuffle(rank);
  const std::size_t late_lo = g.n_rated / 8;
  const std::size_t late_hi =
      std::min(g.n_rated, late_lo + std::min(s.n_late_items, g.n_rated));

  const double latent_scale =
      std::sqrt(s.latent_sd / std::sqrt(static_cast<double>(std::max<std::size_t>(
                                 s.latent_rank, 1))));
  const std::size_t n_items_all = g.n_rated + g.n_extras + g.n_uncat;
  g.items.resize(n_items_all);
  for (std::size_t i = 0; i < n_items_all; ++i) {
    ItemState& it = g.items[i];
    const std::size_t n_attrs =
        1 + (s.max_attrs_per_item > 1 && rng.uniform01() < 0.5 ? 1 : 0) +
        (s.max_attrs_per_item > 2 && rng.uniform01() < 0.3 ? 1 : 0);
    while (it.attrs.size() < n_attrs) {
      const auto a = static_cast<std::uint32_t>(
          static_cast<double>(s.n_attributes) * std::pow(rng.uniform01(), 2.2));
      const auto idx = std::min<std::uint32_t>(a, s.n_attributes - 1);
      if (std::find(it.attrs.begin(), it.attrs.end(), idx) == it.attrs.end()) {
        it.attrs.push_back(idx);
      }
    }
    it.title = render_title(s, rng, pools, words, it.attrs);
    it.bias = rng.normal(0.0, s.item_bias_sd);
    it.latent.resize(s.latent_rank);
    for (double& v : it.latent) v = rng.normal(0.0, latent_scale);
    if (i < g.n_rated) {
      it.weight = std::pow(static_cast<double>(rank[i]) + 3.0, -s.popularity_exponent);
      if (rank[i] >= late_lo && rank[i] < late_hi) {
        it.avail01 = 1.0 - s.late_window + s.late_window * rng.uniform01();
      }
    }
  }
  if (s.kind == "movielens" && !g.items.empty()) {
    g.items[0].title = "Caf\xE9 Lumi\xE8re (2001)";  // Latin-1 bytes on purpose
  } else if (!g.items.empty()) {
    g.items[0].title = "Caf\xC3\xA9 Stories";  // UTF-8
  }

  std::vector<double> cdf(g.n_rated);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n_rated; ++i) {
    acc += g.items[i].weight;
    cdf[i] = acc;
  }

  // Users: join time, activity, taste.
  const double range = static_cast<double>(s.t_end - s.t_start);
  std::vector<UserState> users(s.n_users);
  std::vector<double> join_pool(s.n_users);
  for (std::size_t ui = 0; ui < users.size(); ++ui) {
    UserState& u = users[ui];
    const double pick = rng.uniform01();
    const double where = rng.uniform01();
    join_pool[ui] =
        pick < s.join_early_fraction
            ? s.join_early_window * std::pow(where, 1.3)
            : s.join_early_window + (1.0 - s.join_early_window) * where;
    const double extra = std::exp(rng.normal(s.activity_log_mean, s.activity_log_sd));
    u.n_events = static_cast<std::uint32_t>(std::clamp<double>(
        static_cast<double>(s.min_user_events) + extra,
        static_cast<double>(s.min_user_events), static_cast<double>(s.max_user_events)));
    u.bias = rng.normal(0.0, s.user_bias_sd);
    if (s.neg_shock_prob > 0.0) {
      // Lognormal heterogeneity with mean ~= neg_shock_prob; guarded so that
      // specs without shocks keep an identical draw sequence.
      const double z = rng.normal(0.0, 1.0);
      u.shock_p = std::min(
          0.6, s.neg_shock_prob *
                   std::exp(s.neg_shock_user_sd * z -
                            0.5 * s.neg_shock_user_sd * s.neg_shock_user_sd));
    }
    u.latent.resize(s.latent_rank);
    for (double& v : u.latent) v = rng.normal(0.0, latent_scale);
  }

  // Force the exact event total, trimming or topping up the heaviest users
  // first so the shape of the activity distribution survives.
  std::vector<std::uint32_t> by_activity(users.size());
  for (std::uint32_t i = 0; i < by_activity.size(); ++i) by_activity[i] = i;
  std::sort(by_activity.begin(), by_activity.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (users[a].n_events != users[b].n_events) {
      return users[a].n_events > users[b].n_events;
    }
    return a < b;
  });
  std::int64_t have = 0;
  for (const UserState& u : users) have += u.n_events;
  std::int64_t delta = have - static_cast<std::int64_t>(s.total_events);
  for (std::size_t at = 0; delta != 0; at = (at + 1) % by_activity.size()) {
    UserState& u = users[by_activity[at]];
    if (delta > 0 && u.n_events > s.min_user_events) {
      --u.n_events;
      --delta;
    } else if (delta < 0 && u.n_events < s.max_user_events) {
      ++u.n_events;
      ++delta;
    }
  }

  // Hand the earliest join dates to the heaviest raters (with some rank
  // noise): accounts that stick around longest also rate the most, and late
  // arrivals tend to be casual. This keeps the closing stretch of the range
  // from being dominated by brand-new accounts.
  {
    std::sort(join_pool.begin(), join_pool.end());
    std::vector<std::pair<double, std::uint32_t>> noisy(users.size());
    for (std::size_t r = 0; r < by_activity.size(); ++r) {
      noisy[r] = {static_cast<double>(r) +
                      rng.normal(0.0, s.join_activity_jitter *
                                          static_cast<double>(users.size())),
                  by_activity[r]};
    }
    std::sort(noisy.begin(), noisy.end());
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      users[noisy[i].second].join =
          s.t_start + static_cast<std::int64_t>(join_pool[i] * range * 0.98);
    }
  }

  // Spread the uncatalogued events across users, weighted by activity.
  if (g.n_uncat > 0 && s.n_uncatalogued_events > 0) {
    std::vector<std::uint64_t> act_cdf(users.size());
    std::uint64_t act_acc = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
      act_acc += users[i].n_events;
      act_cdf[i] = act_acc;
    }
    for (std::size_t e = 0; e < s.n_uncatalogued_events; ++e) {
      const std::uint64_t r = rng.below(act_acc);
      const auto at = static_cast<std::size_t>(
          std::upper_bound(act_cdf.begin(), act_cdf.end(), r) - act_cdf.begin());
      ++users[at].n_uncat;
    }
  }

  // The heaviest user goes last and covers any item the sampling missed.
  const std::uint32_t repair_user = by_activity.empty() ? 0 : by_activity.front();
  // "Heavy" raters (top decile by activity) are much more likely to stay
  // active until the end of the range.
  const std::uint32_t heavy_threshold =
      users[by_activity[by_activity.size() / 10]].n_events;

  const std::int64_t t_cap =
      s.t_end + static_cast<std::int64_t>(0.02 * range);
  const double mood_innovation = s.mood_sd * std::sqrt(1.0 - s.mood_rho * s.mood_rho);
  g.events.reserve(s.total_events + s.n_uncatalogued_events);

  auto t01_of = [&](std::int64_t t) {
    return std::clamp((static_cast<double>(t - s.t_start)) / range, 0.0, 1.0);
  };
  auto score_to_rating = [](double score) {
    return static_cast<std::uint8_t>(
        std::clamp<long>(std::lround(score), 1L, 5L));
  };

  auto emit_user = [&](std::uint32_t ui, bool cover_missing) {
    UserState& u = users[ui];
    const std::uint64_t affinity_salt = splitmix64(s.seed ^ (ui + 1));
    double mood = rng.normal(0.0, s.mood_sd);
    std::unordered_set<std::uint32_t> used;
    used.reserve(u.n_events * 2);

    const std::size_t n_slots = u.n_events + u.n_uncat;
    const std::vector<std::int64_t> times = plan_times(
        rng, s, u.join, u.n_events >= heavy_threshold, n_slots, t_cap);
    std::size_t slot = 0;
    std::int64_t t_floor = 0;
    // Consumes the next planned time, clamped forward when an availability
    // constraint (late items) pushed an earlier event past it.
    auto slot_time = [&](std::int64_t at_least) {
      std::int64_t when = std::max(times[slot], t_floor);
      when = std::min(std::max(when, at_least), t_cap);
      t_floor = when;
      ++slot;
      return when;
    };

    auto score_item = [&](const ItemState& it, std::int64_t when) {
      double dot = 0.0;
      for (std::size_t k = 0; k < it.latent.size(); ++k) {
        dot += u.latent[k] * it.latent[k];
      }
      double affinity = 0.0;
      for (const std::uint32_t a : it.attrs) {
        affinity += s.affinity_sd * hash_unit(affinity_salt, a);
      }
      if (!it.attrs.empty()) affinity /= static_cast<double>(it.attrs.size());
      const double t01 = t01_of(when);
      const double ramp =
          std::max(0.0, (t01 - (1.0 - s.late_window)) / s.late_window);
      double score = s.mu + s.late_drift * ramp + u.bias + it.bias + dot +
                     affinity + mood + rng.normal(0.0, s.noise_sd);
      if (u.shock_p > 0.0 && rng.uniform01() < u.shock_p) {
        score -= s.neg_shock_scale * (0.5 + 1.5 * rng.uniform01());
      }
      return score;
    };
    auto advance_mood = [&] {
      mood = s.mood_rho * mood + rng.normal(0.0, mood_innovation);
    };
    auto emit = [&](std::uint32_t item, std::uint8_t rating, std::int64_t when) {
      g.events.push_back({ui, item, rating, when});
    };

    std::uint32_t catalog_slots = u.n_events;
    if (cover_missing) {
      // Pick up every still-unrated catalogue item; visit the ones that become
      // available latest last so the planned times stay mostly monotone.
      std::vector<std::uint32_t> uncovered;
      for (std::uint32_t i = 0; i < g.n_rated; ++i) {
        if (g.items[i].count == 0) uncovered.push_back(i);
      }
      std::sort(uncovered.begin(), uncovered.end(),
                [&](std::uint32_t a, std::uint32_t b) {
                  if (g.items[a].avail01 != g.items[b].avail01) {
                    return g.items[a].avail01 < g.items[b].avail01;
                  }
                  return a < b;
                });
      for (const std::uint32_t i : uncovered) {
        if (catalog_slots == 0) break;
        ItemState& it = g.items[i];
        const std::int64_t at_least =
            it.avail01 > 0.0
                ? s.t_start + static_cast<std::int64_t>(it.avail01 * range) + 3600
                : 0;
        const std::int64_t when = slot_time(at_least);
        emit(i, score_to_rating(score_item(it, when)), when);
        advance_mood();
        it.count++;
        used.insert(i);
        --catalog_slots;
      }
    }

    std::uint32_t uncat_left = u.n_uncat;
    std::uint32_t slots_left = catalog_slots + uncat_left;
    while (slots_left > 0) {
      const std::int64_t t = slot_time(0);
      const bool is_uncat = rng.below(slots_left) < uncat_left;
      if (is_uncat) {
        const auto item = static_cast<std::uint32_t>(g.n_rated + g.n_extras +
                                                     rng.below(g.n_uncat));
        const double score = s.mu + u.bias + rng.normal(0.0, s.noise_sd);
        emit(item, score_to_rating(score), t);
        --uncat_left;
      } else {
        const double t01 = t01_of(t);
        std::uint32_t choice = 0;
        bool found = false;
        for (int attempt = 0; attempt < 60 && !found; ++attempt) {
          const double r = rng.uniform01() * cdf.back();
          choice = static_cast<std::uint32_t>(
              std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
          found = g.items[choice].avail01 <= t01 && used.find(choice) == used.end();
        }
        if (!found) {
          const auto start = static_cast<std::uint32_t>(rng.below(g.n_rated));
          for (std::uint32_t off = 0; off < g.n_rated; ++off) {
            const std::uint32_t cand = (start + off) % g.n_rated;
            if (g.items[cand].avail01 <= t01 && used.find(cand) == used.end()) {
              choice = cand;
              found = true;
              break;
            }
          }
          if (!found) choice = start;  // duplicate of last resort
        }
        ItemState& it = g.items[choice];
        emit(choice, score_to_rating(score_item(it, t)), t);
        advance_mood();
        it.count++;
        used.insert(choice);
      }
      --slots_left;
    }
  };

  for (std::uint32_t ui = 0; ui < users.size(); ++ui) {
    if (ui != repair_user) emit_user(ui, false);
  }
  emit_user(repair_user, true);
  return g;
}

std::string amazon_user_id(std::uint32_t index) {
  static const char* const digits = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::uint64_t h = splitmix64(0xA5A5A5A5ULL + index);
  std::string id = "A";
  for (int c = 0; c < 13; ++c) {
    id += digits[h % 36];
    h = h / 36 + splitmix64(h) % 7;
  }
  return id;
}

std::string amazon_asin(std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "B%09u", index + 1);
  return buf;
}

}  // namespace

SynthSpec SynthSpec::movielens_replica() { return SynthSpec{}; }

SynthSpec SynthSpec::amazon_replica() {
  SynthSpec s;
  s.kind = "amazon";
  s.seed = 8151813;
  s.n_users = 26000;
  s.n_rated_items = 9000;
  s.n_uncatalogued_items = 120;
  s.n_catalog_extras = 30;
  s.total_events = 430003;
  s.n_uncatalogued_events = 5000;
  s.min_user_events = 5;
  s.max_user_events = 400;
  s.activity_log_mean = 1.8;
  s.activity_log_sd = 1.1;
  s.popularity_exponent = 0.85;
  s.n_late_items = 300;
  s.late_window = 0.2;
  s.t_start = 1357000000;   // 2013-01-01
  s.t_end = 1514700000;     // 2017-12-31
  s.join_early_fraction = 0.97;
  s.join_early_window = 0.55;
  s.join_activity_jitter = 0.30;
  s.session_gap_s = 600.0;
  s.session_len_mean = 2.2;
  s.long_life_prob = 0.70;
  s.long_life_heavy_bonus = 0.25;
  s.short_life_span = 0.35;
  s.session_density_power = 1.1;
  s.mu = 4.72;
  s.user_bias_sd = 0.42;
  s.item_bias_sd = 0.26;
  s.latent_rank = 4;
  s.latent_sd = 0.15;
  s.affinity_sd = 0.10;
  s.mood_sd = 0.20;
  s.mood_rho = 0.85;
  s.noise_sd = 0.38;
  s.late_drift = -0.05;
  s.neg_shock_prob = 0.12;
  s.neg_shock_scale = 2.0;
  s.neg_shock_user_sd = 1.6;
  s.n_attributes = 600;
  s.max_attrs_per_item = 1;
  s.title_vocab = 1400;
  return s;
}

SynthSpec SynthSpec::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  SynthSpec s = *this;
  const auto scale = [&](std::size_t v) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(v) * factor)));
  };
  s.n_users = scale(n_users);
  s.n_rated_items = scale(n_rated_items);
  s.n_uncatalogued_items = scale(n_uncatalogued_items);
  s.n_catalog_extras = scale(n_catalog_extras);
  s.total_events = scale(total_events);
  s.n_uncatalogued_events = scale(n_uncatalogued_events);
  s.n_late_items = scale(n_late_items);
  // Keep the totals reachable after independent rounding. Events scale
  // linearly while the (user, item) pair count scales quadratically, so very
  // small scales also need a density cap to keep item sampling sensible.
  const auto max_dense = static_cast<std::size_t>(
      0.35 * static_cast<double>(s.n_users) * static_cast<double>(s.n_rated_items));
  s.total_events = std::min(s.total_events, std::max<std::size_t>(max_dense, 1));
  s.total_events = std::max(s.total_events, s.n_users);
  s.total_events = std::min(s.total_events, s.n_users * s.max_user_events);
  if (s.n_users * s.min_user_events > s.total_events) {
    s.min_user_events = std::max<std::size_t>(1, s.total_events / (2 * s.n_users));
  }
  return s;
}

std::string SynthSpec::to_json() const {
  nlohmann::json j;
#define RATEBENCH_FIELD_OUT(name) j[#name] = name;
  RATEBENCH_SYNTH_FIELDS(RATEBENCH_FIELD_OUT)
#undef RATEBENCH_FIELD_OUT
  return j.dump(2);
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SynthSpec s;
#define RATEBENCH_FIELD_IN(name) \
  if (j.contains(#name)) j.at(#name).get_to(s.name);
  RATEBENCH_SYNTH_FIELDS(RATEBENCH_FIELD_IN)
#undef RATEBENCH_FIELD_IN
  return s;
}

SynthSummary write_movielens_files(const SynthSpec& spec,
                                   const std::filesystem::path& dir) {
  if (spec.kind != "movielens") {
    throw std::invalid_argument("spec kind is not movielens");
  }
  const Generated g = generate(spec);
  std::filesystem::create_directories(dir);

  std::ofstream movies(dir / "movies.dat", std::ios::binary);
  if (!movies) throw std::runtime_error("cannot write " + (dir / "movies.dat").string());
  for (std::size_t i = 0; i < g.n_rated + g.n_extras; ++i) {
    const ItemState& it = g.items[i];
    movies << (i + 1) << "::" << it.title << "::";
    for (std::size_t a = 0; a < it.attrs.size(); ++a) {
      if (a) movies << '|';
      movies << g.attr_names[it.attrs[a]];
    }
    movies << '\n';
  }
  movies.close();

  std::ofstream ratings(dir / "ratings.dat", std::ios::binary);
  if (!ratings) {
    throw std::runtime_error("cannot write " + (dir / "ratings.dat").string());
  }
  SynthSummary summary;
  summary.n_users = spec.n_users;
  summary.n_catalog_records = g.n_rated + g.n_extras;
  for (const GenEvent& e : g.events) {
    ratings << (e.user_index + 1) << "::" << (e.item_index + 1) << "::"
            << static_cast<int>(e.rating) << "::" << e.timestamp << '\n';
    if (e.item_index < g.n_rated) {
      ++summary.n_events;
    } else {
      ++summary.n_filtered_events;
    }
  }
  return summary;
}

SynthSummary write_amazon_files(const SynthSpec& spec,
                                const std::filesystem::path& dir) {
  if (spec.kind != "amazon") {
    throw std::invalid_argument("spec kind is not amazon");
  }
  const Generated g = generate(spec);
  std::filesystem::create_directories(dir);
  using json = nlohmann::json;

  SynthSummary summary;
  summary.n_users = spec.n_users;

  std::ofstream meta(dir / "meta.json", std::ios::binary);
  if (!meta) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
  for (std::size_t i = 0; i < g.items.size(); ++i) {
    const ItemState& it = g.items[i];
    const bool uncatalogued = i >= g.n_rated + g.n_extras;
    if (uncatalogued && (i % 2 == 0)) continue;  // half have no record at all
    json line{{"asin", amazon_asin(static_cast<std::uint32_t>(i))}};
    if (!uncatalogued) line["title"] = it.title;  // the rest lack a title
    if (!it.attrs.empty()) line["brand"] = g.attr_names[it.attrs.front()];
    meta << line.dump() << '\n';
    ++summary.n_catalog_records;
  }
  meta.close();

  std::ofstream reviews(dir / "reviews.json", std::ios::binary);
  if (!reviews) {
    throw std::runtime_error("cannot write " + (dir / "reviews.json").string());
  }
  for (const GenEvent& e : g.events) {
    const json line{{"reviewerID", amazon_user_id(e.user_index)},
                    {"asin", amazon_asin(e.item_index)},
                    {"overall", static_cast<double>(e.rating)},
                    {"unixReviewTime", e.timestamp}};
    reviews << line.dump() << '\n';
    if (e.item_index < g.n_rated) {
      ++summary.n_events;
    } else {
      ++summary.n_filtered_events;
    }
  }
  return summary;
}

}  // namespace ratebench::synth
