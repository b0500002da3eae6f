#include "wayfind/questionnaires.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wayfind/analysis.hpp"
#include "wayfind/building.hpp"
#include "wayfind/csv.hpp"
#include "wayfind/error.hpp"

namespace wayfind {

using nlohmann::json;

namespace {

struct ScaleRule {
  std::string_view id;
  int min;
  int max;
};

// Fixed answer scales of the known instruments.
constexpr ScaleRule kScales[] = {{"ssq", 0, 3}, {"sus", 1, 5}, {"pq", 1, 7}, {"face_validity", 1, 5}};

TotalRule total_rule_from(const std::string& s) {
  if (s == "subscale_raw_sum") return TotalRule::subscale_raw_sum;
  if (s == "converted_sum") return TotalRule::converted_sum;
  if (s == "item_sum") return TotalRule::item_sum;
  if (s == "none") return TotalRule::none;
  throw ParseError("total.rule: unknown rule '" + s + "'");
}

template <class T>
T need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": '" + key + "' has the wrong type");
  }
}

double reversed(const InstrumentItem& it, int v) { return it.reverse ? it.min + it.max - v : v; }

}  // namespace

const InstrumentItem* InstrumentDefinition::find_item(std::string_view id) const {
  for (const auto& it : items) {
    if (it.id == id) return &it;
  }
  return nullptr;
}

double InstrumentDefinition::total_min() const {
  double raw = 0.0;
  switch (total_rule) {
    case TotalRule::subscale_raw_sum:
      for (const auto& s : subscales) {
        for (const auto& m : s.items) raw += find_item(m)->min;
      }
      return raw * multiplier;
    case TotalRule::converted_sum: return 0.0;
    case TotalRule::item_sum:
      for (const auto& it : items) raw += it.min;
      return raw * multiplier;
    case TotalRule::none: return 0.0;
  }
  return 0.0;
}

double InstrumentDefinition::total_max() const {
  double raw = 0.0;
  switch (total_rule) {
    case TotalRule::subscale_raw_sum:
      for (const auto& s : subscales) {
        for (const auto& m : s.items) raw += find_item(m)->max;
      }
      return raw * multiplier;
    case TotalRule::converted_sum:
      for (const auto& it : items) raw += it.max - it.min;
      return raw * multiplier;
    case TotalRule::item_sum:
      for (const auto& it : items) raw += it.max;
      return raw * multiplier;
    case TotalRule::none: return 0.0;
  }
  return 0.0;
}

InstrumentDefinition load_instrument(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instrument: invalid JSON: ") + e.what());
  }
  InstrumentDefinition inst;
  inst.id = need<std::string>(doc, "id", "instrument");
  inst.name = doc.value("name", inst.id);

  if (!doc.contains("items") || !doc["items"].is_array() || doc["items"].empty()) {
    throw ParseError(inst.id + ": items must be a non-empty array");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc["items"].size(); ++i) {
    const json& j = doc["items"][i];
    const std::string where = inst.id + ".items[" + std::to_string(i) + "]";
    InstrumentItem it;
    it.id = need<std::string>(j, "id", where);
    it.prompt = j.value("prompt", "");
    it.min = need<int>(j, "min", where);
    it.max = need<int>(j, "max", where);
    it.reverse = j.value("reverse", false);
    if (it.min >= it.max) throw ParseError(where + ": scale " + std::to_string(it.min) + ".." + std::to_string(it.max) + " is empty");
    for (const auto& r : kScales) {
      if (r.id == inst.id && (it.min != r.min || it.max != r.max)) {
        throw ParseError(where + ": " + inst.id + " items use a " + std::to_string(r.min) + ".." + std::to_string(r.max) + " scale");
      }
    }
    if (!ids.insert(it.id).second) throw ParseError(where + ": duplicate item id " + it.id);
    inst.items.push_back(std::move(it));
  }

  if (doc.contains("subscales")) {
    for (std::size_t i = 0; i < doc["subscales"].size(); ++i) {
      const json& j = doc["subscales"][i];
      const std::string where = inst.id + ".subscales[" + std::to_string(i) + "]";
      Subscale s;
      s.name = need<std::string>(j, "name", where);
      s.items = need<std::vector<std::string>>(j, "items", where);
      const std::string agg = j.value("aggregate", "weighted_sum");
      if (agg == "weighted_sum") {
        s.aggregate = SubscaleAggregate::weighted_sum;
        if (!j.contains("weight")) throw ParseError(where + ": weight missing");
        s.weight = need<double>(j, "weight", where);
      } else if (agg == "mean") {
        s.aggregate = SubscaleAggregate::mean;
      } else {
        throw ParseError(where + ": unknown aggregate '" + agg + "'");
      }
      if (s.items.empty()) throw ParseError(where + ": no member items");
      for (const auto& m : s.items) {
        if (!ids.count(m)) throw ParseError(where + ": unknown item " + m);
      }
      inst.subscales.push_back(std::move(s));
    }
  }

  const json total = doc.value("total", json::object());
  inst.total_rule = total_rule_from(total.value("rule", "none"));
  if (inst.total_rule != TotalRule::none) {
    if (!total.contains("multiplier")) throw ParseError(inst.id + ".total: multiplier missing");
    inst.multiplier = need<double>(total, "multiplier", inst.id + ".total");
  }
  if (inst.total_rule == TotalRule::subscale_raw_sum && inst.subscales.empty()) {
    throw ParseError(inst.id + ".total: subscale_raw_sum needs subscales");
  }

  if (doc.contains("bands")) {
    for (std::size_t i = 0; i < doc["bands"].size(); ++i) {
      const json& j = doc["bands"][i];
      const std::string where = inst.id + ".bands[" + std::to_string(i) + "]";
      Band b;
      b.label = need<std::string>(j, "label", where);
      if (j.contains("below")) b.below = need<double>(j, "below", where);
      const bool last = i + 1 == doc["bands"].size();
      if (last == b.below.has_value()) throw ParseError(where + ": only the last band omits 'below'");
      if (b.below && !inst.bands.empty() && *b.below <= *inst.bands.back().below) {
        throw ParseError(where + ": band bounds must increase");
      }
      inst.bands.push_back(std::move(b));
    }
  }
  return inst;
}

InstrumentDefinition load_instrument_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_instrument(ss.str());
}

InstrumentDefinition load_bundled_instrument(std::string_view id) {
  return load_instrument_file(std::filesystem::path(data_dir()) / "instruments" / (std::string(id) + ".json"));
}

std::vector<ResponseSet> parse_responses(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::split(line) != std::vector<std::string>{"participant_id", "instrument", "item_id", "value"}) {
    throw ParseError("responses: expected header participant_id,instrument,item_id,value");
  }
  std::vector<ResponseSet> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    long long v = 0;
    if (f.size() != 4 || !csv::parse_int(f[3], v)) throw ParseError("responses row " + std::to_string(row) + ": malformed");
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ResponseSet& r) { return r.participant_id == f[0] && r.instrument == f[1]; });
    if (it == out.end()) {
      out.push_back({f[0], f[1], {}});
      it = out.end() - 1;
    }
    if (!it->answers.emplace(f[2], static_cast<int>(v)).second) {
      throw ParseError("responses row " + std::to_string(row) + ": duplicate answer for item " + f[2]);
    }
  }
  return out;
}

std::string band_for(const InstrumentDefinition& inst, double total) {
  for (const auto& b : inst.bands) {
    if (!b.below || total < *b.below) return b.label;
  }
  return {};
}

ScoreReport score(const InstrumentDefinition& inst, const ResponseSet& response) {
  if (!response.instrument.empty() && response.instrument != inst.id) {
    throw InvalidArgument("response is for " + response.instrument + ", not " + inst.id);
  }
  for (const auto& [id, v] : response.answers) {
    if (!inst.find_item(id)) throw InvalidArgument(inst.id + ": unknown item " + id);
  }
  ScoreReport r;
  r.participant_id = response.participant_id;
  r.instrument = inst.id;
  for (const auto& it : inst.items) {
    auto a = response.answers.find(it.id);
    if (a == response.answers.end()) {
      throw InvalidArgument(inst.id + ": participant " + response.participant_id + " did not answer item " + it.id);
    }
    if (a->second < it.min || a->second > it.max) {
      throw InvalidArgument(inst.id + ": item " + it.id + " answer " + std::to_string(a->second) + " outside " +
                            std::to_string(it.min) + ".." + std::to_string(it.max));
    }
    r.items[it.id] = reversed(it, a->second);
  }

  double raw_union = 0.0;
  for (const auto& s : inst.subscales) {
    double raw = 0.0;
    for (const auto& m : s.items) raw += r.items.at(m);
    raw_union += raw;
    const double value =
        s.aggregate == SubscaleAggregate::mean ? raw / static_cast<double>(s.items.size()) : raw * s.weight;
    r.subscales.emplace_back(s.name, value);
  }

  switch (inst.total_rule) {
    case TotalRule::subscale_raw_sum: r.total = raw_union * inst.multiplier; break;
    case TotalRule::converted_sum: {
      double sum = 0.0;
      for (const auto& it : inst.items) sum += r.items.at(it.id) - it.min;
      r.total = sum * inst.multiplier;
      break;
    }
    case TotalRule::item_sum: {
      double sum = 0.0;
      for (const auto& it : inst.items) sum += r.items.at(it.id);
      r.total = sum * inst.multiplier;
      break;
    }
    case TotalRule::none: break;
  }
  if (r.total && !inst.bands.empty()) r.band = band_for(inst, *r.total);
  return r;
}

std::vector<SummaryRow> summarize_cohort(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) throw InvalidArgument("cannot summarize an empty cohort");
  const std::string& inst = reports.front().instrument;
  for (const auto& r : reports) {
    if (r.instrument != inst) throw InvalidArgument("cohort mixes instruments " + inst + " and " + r.instrument);
  }
  std::vector<SummaryRow> out;
  auto add = [&](const std::string& measure, auto get) {
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(get(r));
    const Stat s = describe(xs);
    out.push_back({measure, s.mean, s.sd});
  };
  if (reports.front().total) add("total", [](const ScoreReport& r) { return r.total.value_or(0.0); });
  for (std::size_t i = 0; i < reports.front().subscales.size(); ++i) {
    add(reports.front().subscales[i].first, [i](const ScoreReport& r) { return r.subscales.at(i).second; });
  }
  if (!reports.front().total) {
    for (const auto& [id, _] : reports.front().items) {
      add(id, [&id](const ScoreReport& r) { return r.items.at(id); });
    }
  }
  return out;
}

}  // namespace wayfind
