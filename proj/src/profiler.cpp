#include "strot/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <unordered_map>

#include "strot/cell.hpp"

namespace strot {
namespace {

const std::vector<TemporalFormat> kAllTemporalFormats = {
    TemporalFormat::iso_date, TemporalFormat::iso_datetime,
    TemporalFormat::ymd_slash, TemporalFormat::mdy_slash,
    TemporalFormat::dmy_month_name};

struct ValueStats {
  std::size_t count = 0;
  std::size_t first_row = 0;
};

double shannon_entropy(const std::unordered_map<std::string, ValueStats>& freq,
                       std::size_t non_null) {
  if (non_null == 0) return 0.0;
  double h = 0.0;
  for (const auto& [_, stats] : freq) {
    double p = static_cast<double>(stats.count) / static_cast<double>(non_null);
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;  // clamp the -0.0 a single-value column produces
}

// Uniform sampling: walk a seeded shuffle of the non-null rows and keep the
// first k distinct values encountered.
std::vector<std::string> sample_uniform(const std::vector<const std::string*>& texts,
                                        std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(texts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::string> out;
  std::unordered_map<std::string, ValueStats> seen;
  for (std::size_t idx : order) {
    if (out.size() >= k) break;
    const std::string& v = *texts[idx];
    if (seen.emplace(v, ValueStats{}).second) out.push_back(v);
  }
  return out;
}

// Stratified sampling for categoricals: the k most frequent values, ties
// broken by first appearance.
std::vector<std::string> sample_stratified(
    const std::unordered_map<std::string, ValueStats>& freq, std::size_t k) {
  std::vector<std::pair<std::string, ValueStats>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_row < b.second.first_row;
  });
  std::vector<std::string> out;
  for (const auto& [value, _] : entries) {
    if (out.size() >= k) break;
    out.push_back(value);
  }
  return out;
}

std::string render_percent(double fraction) {
  return format_compact(fraction * 100.0) + "%";
}

std::string cut(const std::string& value, std::size_t limit) {
  if (value.size() <= limit) return value;
  return value.substr(0, limit - 2) + "..";
}

}  // namespace

const char* semantic_type_name(SemanticType type) {
  switch (type) {
    case SemanticType::numerical: return "numerical";
    case SemanticType::categorical: return "categorical";
    case SemanticType::temporal: return "temporal";
  }
  return "categorical";
}

ColumnProfile profile_column(const Column& column, const ProfilerConfig& config) {
  ColumnProfile profile;
  profile.name = column.name;
  profile.signature.rows = column.cells.size();

  // Raw text view of the non-null cells, plus frequency bookkeeping.
  std::vector<std::string> texts;
  texts.reserve(column.cells.size());
  for (const auto& cell : column.cells) texts.push_back(cell_text(cell));

  std::vector<const std::string*> non_null;
  std::unordered_map<std::string, ValueStats> freq;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (is_null_text(texts[i])) continue;
    non_null.push_back(&texts[i]);
    auto [it, inserted] = freq.try_emplace(texts[i], ValueStats{0, i});
    ++it->second.count;
  }

  auto& sig = profile.signature;
  sig.non_null = non_null.size();
  sig.distinct = freq.size();
  sig.null_fraction =
      sig.rows == 0 ? 0.0
                    : static_cast<double>(sig.rows - sig.non_null) /
                          static_cast<double>(sig.rows);
  sig.entropy_bits = shannon_entropy(freq, sig.non_null);

  if (sig.non_null == 0) {
    sig.all_null = true;
    profile.type = SemanticType::categorical;
    return profile;
  }

  std::size_t temporal_hits = 0;
  std::size_t numeric_hits = 0;
  std::vector<double> numbers;
  std::vector<Timestamp> stamps;
  for (const auto* text : non_null) {
    if (auto ts = parse_temporal(*text, kAllTemporalFormats)) {
      ++temporal_hits;
      stamps.push_back(*ts);
    }
    if (auto num = parse_number(*text)) {
      ++numeric_hits;
      numbers.push_back(*num);
    }
  }

  double n = static_cast<double>(sig.non_null);
  double distinct_ratio = static_cast<double>(sig.distinct) / n;
  if (static_cast<double>(temporal_hits) / n >= config.temporal_threshold) {
    profile.type = SemanticType::temporal;
    auto [lo, hi] = std::minmax_element(stamps.begin(), stamps.end());
    sig.earliest = to_iso8601(*lo);
    sig.latest = to_iso8601(*hi);
  } else if (static_cast<double>(numeric_hits) / n >= config.numeric_threshold &&
             sig.distinct >= config.numeric_min_distinct &&
             distinct_ratio >= config.numeric_min_distinct_ratio) {
    profile.type = SemanticType::numerical;
    auto [lo, hi] = std::minmax_element(numbers.begin(), numbers.end());
    sig.minimum = *lo;
    sig.maximum = *hi;
    double count = static_cast<double>(numbers.size());
    double mean = pairwise_sum(numbers.data(), numbers.size()) / count;
    sig.mean = mean;
    if (numbers.size() >= 3) {
      double m2 = 0.0, m3 = 0.0;
      for (double v : numbers) {
        double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
      }
      m2 /= count;
      m3 /= count;
      if (m2 > 0.0) sig.skewness = m3 / std::pow(m2, 1.5);
    }
  } else {
    profile.type = SemanticType::categorical;
  }

  profile.samples = profile.type == SemanticType::categorical
                        ? sample_stratified(freq, config.sample_count)
                        : sample_uniform(non_null, config.sample_count, config.seed);
  return profile;
}

SchemaContext build_context(const Dataset& dataset, const ProfilerConfig& config) {
  SchemaContext context;
  context.dataset_name = dataset.name;
  context.row_count = dataset.row_count;
  context.columns.reserve(dataset.columns.size());
  for (const auto& column : dataset.columns)
    context.columns.push_back(profile_column(column, config));
  return context;
}

std::string render_context(const SchemaContext& context, const ProfilerConfig& config) {
  std::string out = "dataset: " + context.dataset_name;
  char buf[64];
  std::snprintf(buf, sizeof(buf), " (%zu rows, %zu columns)\n", context.row_count,
                context.columns.size());
  out += buf;

  for (const auto& col : context.columns) {
    const auto& sig = col.signature;
    out += "- " + col.name + " (" + semantic_type_name(col.type) + ", " +
           render_percent(sig.null_fraction) + " null, " +
           std::to_string(sig.distinct) + " uniq";
    switch (col.type) {
      case SemanticType::numerical:
        out += ") [" + format_compact(*sig.minimum) + ".." +
               format_compact(*sig.maximum) + "] mean " + format_compact(*sig.mean);
        if (sig.skewness) out += " skew " + format_compact(*sig.skewness);
        break;
      case SemanticType::temporal:
        out += ") [" + *sig.earliest + ".." + *sig.latest + "]";
        break;
      case SemanticType::categorical:
        if (sig.all_null) {
          out += ", all null)";
        } else {
          std::snprintf(buf, sizeof(buf), ", H=%.2f)", sig.entropy_bits);
          out += buf;
        }
        break;
    }
    if (!col.samples.empty()) {
      out += " ex:";
      bool quoted = col.type == SemanticType::categorical;
      for (std::size_t i = 0; i < col.samples.size(); ++i) {
        out += i ? ", " : " ";
        std::string v = cut(col.samples[i], config.render_sample_chars);
        out += quoted ? "\"" + v + "\"" : v;
      }
    }
    out.push_back('\n');
  }
  return out;
}

ojson context_to_json(const SchemaContext& context) {
  ojson j;
  j["dataset"] = context.dataset_name;
  j["rows"] = context.row_count;
  ojson cols = ojson::array();
  for (const auto& col : context.columns) {
    const auto& sig = col.signature;
    ojson c;
    c["name"] = col.name;
    c["type"] = semantic_type_name(col.type);
    ojson s;
    s["rows"] = sig.rows;
    s["non_null"] = sig.non_null;
    s["distinct"] = sig.distinct;
    s["null_fraction"] = sig.null_fraction;
    s["entropy_bits"] = sig.entropy_bits;
    if (sig.all_null) s["all_null"] = true;
    if (sig.minimum) s["min"] = *sig.minimum;
    if (sig.maximum) s["max"] = *sig.maximum;
    if (sig.mean) s["mean"] = *sig.mean;
    if (sig.skewness) s["skew"] = *sig.skewness;
    if (sig.earliest) s["earliest"] = *sig.earliest;
    if (sig.latest) s["latest"] = *sig.latest;
    c["signature"] = std::move(s);
    c["samples"] = col.samples;
    cols.push_back(std::move(c));
  }
  j["columns"] = std::move(cols);
  return j;
}

std::string context_digest(const SchemaContext& context) {
  return fnv1a64_hex(context_to_json(context).dump());
}

}  // namespace strot
