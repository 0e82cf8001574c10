#include "recaudit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "recaudit/random.hpp"

namespace recaudit::synthetic {

namespace {

std::size_t uniform_length(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

std::shared_ptr<const ItemIndex> numbered_index(std::size_t n, const char* prefix) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("{}{}", prefix, i));
  return std::make_shared<const ItemIndex>(std::move(ids));
}

// Discrete sampler over a fixed weight vector via cumulative sums.
class CumulativeSampler {
 public:
  explicit CumulativeSampler(const std::vector<double>& weights) : cumulative_(weights.size()) {
    std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

class DriftingProcess {
 public:
  explicit DriftingProcess(const DriftSpec& spec) : spec_(spec), rng_(mix_seed(spec.seed, 7)) {
    if (spec.items < spec.successors + 1) throw std::invalid_argument("drift spec needs items > successors");
    if (spec.min_length < 2 || spec.max_length < spec.min_length) throw std::invalid_argument("bad session lengths");
    successors_.resize(spec.items);
    for (std::size_t i = 0; i < spec.items; ++i) redraw(i);
    std::vector<double> w(spec.items);
    for (std::size_t i = 0; i < spec.items; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), spec.start_item_skew);
    start_ = std::make_unique<CumulativeSampler>(w);
  }

  void advance_to(std::size_t day) {
    if (day == 0) return;
    const double share = day == spec_.drift_day ? spec_.drift_fraction : spec_.daily_drift;
    for (std::size_t i = 0; i < spec_.items; ++i) {
      if (rng_.bernoulli(share)) redraw(i);
    }
  }

  std::vector<ItemId> session(Rng& rng) const {
    const std::size_t len = uniform_length(rng, spec_.min_length, spec_.max_length);
    std::vector<ItemId> items;
    items.reserve(len);
    items.push_back(static_cast<ItemId>(start_->draw(rng)));
    while (items.size() < len) {
      const auto& next = successors_[items.back()];
      items.push_back(next[rng.below(next.size())]);
    }
    return items;
  }

 private:
  void redraw(std::size_t item) {
    auto& next = successors_[item];
    next.clear();
    while (next.size() < spec_.successors) {
      const auto cand = static_cast<ItemId>(rng_.below(spec_.items));
      if (cand != item && std::find(next.begin(), next.end(), cand) == next.end()) next.push_back(cand);
    }
  }

  DriftSpec spec_;
  Rng rng_;
  std::vector<std::vector<ItemId>> successors_;
  std::unique_ptr<CumulativeSampler> start_;
};

}  // namespace

Dataset planted_chains(const ChainSpec& spec) {
  if (spec.min_length < 2 || spec.max_length < spec.min_length || spec.max_length > spec.chain_length) {
    throw std::invalid_argument("chain spec needs 2 <= min_length <= max_length <= chain_length");
  }
  Dataset data;
  data.items = numbered_index(spec.chains * spec.chain_length, "c");
  Rng rng(spec.seed);
  for (std::size_t s = 0; s < spec.sequences; ++s) {
    const std::size_t chain = static_cast<std::size_t>(rng.below(spec.chains));
    const std::size_t offset = static_cast<std::size_t>(rng.below(spec.chain_length));
    const std::size_t len = uniform_length(rng, spec.min_length, spec.max_length);
    Sequence seq;
    seq.seq_id = s;
    const Timestamp t0 = spec.start + static_cast<Timestamp>(s) * spec.spacing;
    for (std::size_t p = 0; p < len; ++p) {
      const auto item = static_cast<ItemId>(chain * spec.chain_length + (offset + p) % spec.chain_length);
      seq.events.push_back({item, t0 + static_cast<Timestamp>(p) * 10});
    }
    data.sequences.push_back(std::move(seq));
  }
  data.recount_support();
  return data;
}

Dataset shuffle_within_sequences(const Dataset& data, std::uint64_t seed) {
  Dataset out = data;
  Rng rng(seed);
  for (auto& s : out.sequences) {
    for (std::size_t i = s.events.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(s.events[i - 1].item, s.events[j].item);
    }
  }
  return out;
}

Dataset drifting_sessions(const DriftSpec& spec) {
  DriftingProcess process(spec);
  Dataset data;
  data.items = numbered_index(spec.items, "i");
  Rng rng(mix_seed(spec.seed, 11));
  std::uint64_t next_id = 0;
  for (std::size_t day = 0; day < spec.days; ++day) {
    process.advance_to(day);
    std::vector<Sequence> today;
    for (std::size_t k = 0; k < spec.sessions_per_day; ++k) {
      Sequence seq;
      Timestamp t = day_start(static_cast<std::int64_t>(day)) + 60 + static_cast<Timestamp>(rng.below(20 * 3600));
      for (ItemId item : process.session(rng)) {
        seq.events.push_back({item, t});
        t += 30 + static_cast<Timestamp>(rng.below(90));
      }
      today.push_back(std::move(seq));
    }
    std::stable_sort(today.begin(), today.end(),
                     [](const Sequence& a, const Sequence& b) { return a.start_time() < b.start_time(); });
    for (auto& s : today) {
      s.seq_id = next_id++;
      data.sequences.push_back(std::move(s));
    }
  }
  data.recount_support();
  return data;
}

std::vector<RawEvent> event_log(const LogSpec& spec) {
  const DriftSpec& d = spec.drift;
  DriftingProcess process(d);
  Rng rng(mix_seed(d.seed, 13));
  std::vector<RawEvent> events;
  for (std::size_t day = 0; day < d.days; ++day) {
    process.advance_to(day);
    for (std::size_t u = 0; u < spec.users; ++u) {
      if (!rng.bernoulli(spec.activity)) continue;
      Timestamp t = day_start(static_cast<std::int64_t>(day)) + 60 + static_cast<Timestamp>(rng.below(20 * 3600));
      const std::string user = fmt::format("u{}", u);
      for (ItemId item : process.session(rng)) {
        const std::string id = fmt::format("i{}", item);
        events.push_back({user, id, t, "view"});
        if (rng.bernoulli(spec.cart_probability)) events.push_back({user, id, t + 1, "cart"});
        t += 30 + static_cast<Timestamp>(rng.below(90));
      }
    }
  }
  return events;
}

void write_event_csv(const std::vector<RawEvent>& events, std::ostream& out) {
  out << "user_id,item_id,timestamp,event_type\n";
  for (const auto& e : events) out << e.entity << ',' << e.item << ',' << e.timestamp << ',' << e.type << '\n';
}

}  // namespace recaudit::synthetic
