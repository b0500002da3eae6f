#pragma once

// Data-driven questionnaire scoring. Instruments (items, scales, reverse
// flags, subscales, total rule, bands) are JSON documents; the engine only
// knows the aggregation rules.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wayfind {

struct InstrumentItem {
  std::string id;
  std::string prompt;
  int min = 0;
  int max = 0;
  bool reverse = false;
};

enum class SubscaleAggregate { weighted_sum, mean };

struct Subscale {
  std::string name;
  std::vector<std::string> items;
  SubscaleAggregate aggregate = SubscaleAggregate::weighted_sum;
  double weight = 1.0;
};

/// subscale_raw_sum: (sum over subscales of raw member sums) x multiplier,
///   members counted once per subscale they belong to.
/// converted_sum: sum of (value' - min) x multiplier.
/// item_sum: sum of value' x multiplier.
/// none: no total.
/// value' is the answer after reversal (min + max - value).
enum class TotalRule { subscale_raw_sum, converted_sum, item_sum, none };

struct Band {
  std::optional<double> below;  // upper bound (exclusive); absent on the last band
  std::string label;
};

struct InstrumentDefinition {
  std::string id;
  std::string name;
  std::vector<InstrumentItem> items;
  std::vector<Subscale> subscales;
  TotalRule total_rule = TotalRule::none;
  double multiplier = 1.0;
  std::vector<Band> bands;

  const InstrumentItem* find_item(std::string_view id) const;
  double total_min() const;
  double total_max() const;
};

/// Parses and validates; throws ParseError naming the violated rule.
InstrumentDefinition load_instrument(std::string_view document);
InstrumentDefinition load_instrument_file(const std::filesystem::path& path);
/// instruments/<id>.json under the data directory.
InstrumentDefinition load_bundled_instrument(std::string_view id);

struct ResponseSet {
  std::string participant_id;
  std::string instrument;
  std::map<std::string, int> answers;
};

/// CSV "participant_id,instrument,item_id,value"; sets keep first-seen order.
std::vector<ResponseSet> parse_responses(const std::string& text);

struct ScoreReport {
  std::string participant_id;
  std::string instrument;
  std::vector<std::pair<std::string, double>> subscales;
  std::optional<double> total;
  std::optional<std::string> band;
  std::map<std::string, double> items;  // answers after reversal
};

/// Throws InvalidArgument on a missing item, unknown item or out-of-range answer.
ScoreReport score(const InstrumentDefinition& inst, const ResponseSet& response);

std::string band_for(const InstrumentDefinition& inst, double total);

struct SummaryRow {
  std::string measure;
  double mean = 0.0;
  double sd = 0.0;
};

/// Sample mean/SD of totals, subscales and (for instruments without a total)
/// every item. Throws InvalidArgument on an empty or mixed set.
std::vector<SummaryRow> summarize_cohort(const std::vector<ScoreReport>& reports);

}  // namespace wayfind
