#include "pistol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <unordered_map>

#include "detail/jsonl.hpp"
#include "pistol/error.hpp"

namespace pistol {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Byte length of a Unicode space character starting at s[i], or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto at = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
  const std::size_t left = s.size() - i;
  if (left >= 2 && at(0) == 0xC2 && (at(1) == 0xA0 || at(1) == 0x85)) return 2;
  if (left >= 3 && at(0) == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
  if (left >= 3 && at(0) == 0xE2 && at(1) == 0x80 &&
      ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 || at(2) == 0xA9 || at(2) == 0xAF)) {
    return 3;
  }
  if (left >= 3 && at(0) == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
  if (left >= 3 && at(0) == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
  return 0;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::string ids_list(const std::vector<QuestionId>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += to_string(id);
  }
  return out;
}

std::optional<double> opt_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(ErrorKind::Parse, std::string("report field \"") + key + "\" must be a number");
  return it->get<double>();
}

double number(const json& j, const char* key) {
  auto v = opt_number(j, key);
  if (!v) fail(ErrorKind::Parse, std::string("report is missing \"") + key + "\"");
  return *v;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_ascii_space(c) || is_ascii_punct(c)) {
      flush();
      ++i;
    } else if (std::size_t n = unicode_space_len(text, i)) {
      flush();
      i += n;
    } else {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
      ++i;
    }
  }
  flush();
  return out;
}

double rouge1_recall(std::string_view candidate, std::string_view reference) {
  const auto ref = tokenize(reference);
  if (ref.empty()) fail(ErrorKind::InvalidParameter, "reference has no tokens");
  std::unordered_map<std::string, std::int64_t> avail;
  for (auto& t : tokenize(candidate)) ++avail[t];
  std::int64_t hits = 0;
  for (const auto& t : ref) {
    auto it = avail.find(t);
    if (it != avail.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ref.size());
}

namespace {
void check_ranks(std::span<const std::int64_t> ranks) {
  if (ranks.empty()) fail(ErrorKind::InvalidParameter, "rank record is empty");
  for (auto r : ranks) {
    if (r < 1) fail(ErrorKind::InvalidParameter, "ranks are 1-based; got " + std::to_string(r));
  }
}
}  // namespace

double mrr(std::span<const std::int64_t> target_ranks) {
  check_ranks(target_ranks);
  double s = 0.0;
  for (auto r : target_ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(target_ranks.size());
}

double thr(std::span<const std::int64_t> target_ranks, std::int64_t m) {
  if (m < 1) fail(ErrorKind::InvalidParameter, "hit cutoff must be at least 1");
  check_ranks(target_ranks);
  const auto hits = std::count_if(target_ranks.begin(), target_ranks.end(),
                                  [m](std::int64_t r) { return r <= m; });
  return static_cast<double>(hits) / static_cast<double>(target_ranks.size());
}

double deviation_score(double rouge_forget, double rouge_retain) {
  const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(rouge_forget) || !unit(rouge_retain)) {
    fail(ErrorKind::InvalidParameter, "ROUGE values must lie in [0, 1]");
  }
  return 100.0 * std::hypot(rouge_forget, 1.0 - rouge_retain);
}

std::string to_string(const QuestionId& id) { return id.edge + "#" + std::to_string(id.slot); }

double MetricReport::mean_rouge_for_edges(std::span<const std::string> edges) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& q : questions) {
    if (std::find(edges.begin(), edges.end(), q.id.edge) != edges.end()) {
      s += q.rouge1;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

MetricReport aggregate(const ForgetSplit& split, std::span<const GenerationRecord> gens,
                       std::optional<std::span<const RankRecord>> ranks, std::int64_t hit_cutoff) {
  std::map<QuestionId, const GenerationRecord*> by_id;
  for (const auto& g : gens) {
    if (!by_id.emplace(g.id, &g).second) {
      fail(ErrorKind::InvalidParameter, "duplicate generation for " + to_string(g.id));
    }
  }
  std::map<QuestionId, const RankRecord*> rank_by_id;
  if (ranks) {
    for (const auto& r : *ranks) {
      if (!rank_by_id.emplace(r.id, &r).second) {
        fail(ErrorKind::InvalidParameter, "duplicate rank record for " + to_string(r.id));
      }
    }
  }

  std::vector<QuestionId> missing;
  for (const auto* side : {&split.forget, &split.retain}) {
    for (const auto& q : *side) {
      QuestionId id{q.edge, q.slot};
      if (!by_id.contains(id)) missing.push_back(id);
      if (ranks && !rank_by_id.contains(id)) missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    fail(ErrorKind::IncompleteInput,
         std::string(ranks ? "missing generation or rank record" : "missing generation") +
             " for " + std::to_string(missing.size()) + " question(s): " + ids_list(missing));
  }

  MetricReport rep;
  std::vector<double> rf, rr, mf, mr, tf, tr;
  for (bool forget : {true, false}) {
    for (const auto& q : forget ? split.forget : split.retain) {
      QuestionScore s;
      s.id = {q.edge, q.slot};
      s.forget = forget;
      s.rouge1 = rouge1_recall(by_id.at(s.id)->text, q.answer);
      (forget ? rf : rr).push_back(s.rouge1);
      if (ranks) {
        const auto& tr_ = rank_by_id.at(s.id)->target_ranks;
        s.mrr = mrr(tr_);
        s.thr = thr(tr_, hit_cutoff);
        (forget ? mf : mr).push_back(*s.mrr);
        (forget ? tf : tr).push_back(*s.thr);
      }
      rep.questions.push_back(std::move(s));
    }
  }
  rep.rouge1_forget = mean(rf);
  rep.rouge1_retain = mean(rr);
  if (ranks) {
    rep.mrr_forget = mean(mf);
    rep.mrr_retain = mean(mr);
    rep.thr_forget = mean(tf);
    rep.thr_retain = mean(tr);
  }
  rep.deviation = deviation_score(rep.rouge1_forget, rep.rouge1_retain);
  return rep;
}

std::string format_generations_jsonl(std::span<const GenerationRecord> gens) {
  std::string out;
  for (const auto& g : gens) {
    ordered_json j;
    j["edge"] = g.id.edge;
    j["slot"] = g.id.slot;
    j["text"] = g.text;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<GenerationRecord> parse_generations_jsonl(std::string_view text) {
  std::vector<GenerationRecord> out;
  const auto lines = detail::jsonl_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = detail::parse_object_line(lines[i], i + 1);
    detail::require_keys(j, {"edge", "slot", "text"}, i + 1);
    out.push_back({{detail::string_field(j, "edge", i + 1), detail::slot_field(j, i + 1)},
                   detail::string_field(j, "text", i + 1)});
  }
  return out;
}

std::string format_ranks_jsonl(std::span<const RankRecord> ranks) {
  std::string out;
  for (const auto& r : ranks) {
    ordered_json j;
    j["edge"] = r.id.edge;
    j["slot"] = r.id.slot;
    j["target_ranks"] = r.target_ranks;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<RankRecord> parse_ranks_jsonl(std::string_view text) {
  std::vector<RankRecord> out;
  const auto lines = detail::jsonl_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = detail::parse_object_line(lines[i], i + 1);
    detail::require_keys(j, {"edge", "slot", "target_ranks"}, i + 1);
    RankRecord r;
    r.id = {detail::string_field(j, "edge", i + 1), detail::slot_field(j, i + 1)};
    const json& arr = j["target_ranks"];
    if (!arr.is_array() || arr.empty()) {
      fail(ErrorKind::Parse, detail::line_error(i + 1, "\"target_ranks\" must be a non-empty array"));
    }
    for (const auto& v : arr) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        fail(ErrorKind::Parse, detail::line_error(i + 1, "\"target_ranks\" entries must be integers >= 1"));
      }
      r.target_ranks.push_back(v.get<std::int64_t>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

ordered_json report_to_json(const MetricReport& report, bool with_questions) {
  ordered_json j;
  j["rouge1_forget"] = report.rouge1_forget;
  j["rouge1_retain"] = report.rouge1_retain;
  j["deviation_score"] = report.deviation;
  const auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("mrr_forget", report.mrr_forget);
  put("mrr_retain", report.mrr_retain);
  put("thr_forget", report.thr_forget);
  put("thr_retain", report.thr_retain);
  if (with_questions) {
    ordered_json qs = ordered_json::array();
    for (const auto& q : report.questions) {
      ordered_json e;
      e["edge"] = q.id.edge;
      e["slot"] = q.id.slot;
      e["split"] = q.forget ? "forget" : "retain";
      e["rouge1"] = q.rouge1;
      if (q.mrr) e["mrr"] = *q.mrr;
      if (q.thr) e["thr"] = *q.thr;
      qs.push_back(std::move(e));
    }
    j["questions"] = std::move(qs);
  }
  return j;
}

MetricReport report_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "report must be a JSON object");
  MetricReport r;
  r.rouge1_forget = number(j, "rouge1_forget");
  r.rouge1_retain = number(j, "rouge1_retain");
  r.deviation = number(j, "deviation_score");
  r.mrr_forget = opt_number(j, "mrr_forget");
  r.mrr_retain = opt_number(j, "mrr_retain");
  r.thr_forget = opt_number(j, "thr_forget");
  r.thr_retain = opt_number(j, "thr_retain");
  if (auto it = j.find("questions"); it != j.end()) {
    if (!it->is_array()) fail(ErrorKind::Parse, "report \"questions\" must be an array");
    for (const auto& e : *it) {
      if (!e.is_object() || !e.contains("edge") || !e["edge"].is_string() || !e.contains("slot") ||
          !e["slot"].is_number_integer() || !e.contains("split") || !e["split"].is_string()) {
        fail(ErrorKind::Parse, "malformed question entry in report");
      }
      QuestionScore q;
      q.id = {e["edge"].get<std::string>(), e["slot"].get<int>()};
      q.forget = e["split"] == "forget";
      q.rouge1 = number(e, "rouge1");
      q.mrr = opt_number(e, "mrr");
      q.thr = opt_number(e, "thr");
      r.questions.push_back(std::move(q));
    }
  }
  return r;
}

std::string format_report_text(const MetricReport& report) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s\n", "", "Forget", "Retain");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %8.3f %8.3f\n", "ROUGE1", report.rouge1_forget,
                report.rouge1_retain);
  out += buf;
  if (report.mrr_forget && report.mrr_retain) {
    std::snprintf(buf, sizeof buf, "%-16s %8.3f %8.3f\n", "MRR", *report.mrr_forget, *report.mrr_retain);
    out += buf;
  }
  if (report.thr_forget && report.thr_retain) {
    std::snprintf(buf, sizeof buf, "%-16s %8.3f %8.3f\n", "THR", *report.thr_forget, *report.thr_retain);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-16s %8.1f\n", "Deviation Score", report.deviation);
  out += buf;
  return out;
}

}  // namespace pistol
