#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "isarec/error.hpp"
#include "isarec/evaluation.hpp"

namespace isarec {

const std::vector<ReferenceRow>& reference_modalities() {
  static const std::vector<ReferenceRow> rows = {
      {"Grayscale", {"gray"}, 60.0},
      {"Depth", {"depth"}, 50.8},
      {"Grayscale & Depth", {"fused"}, 61.3},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_activities() {
  static const std::vector<ReferenceRow> rows = {
      {"Ask", {"ask", "askingandaway"}, 44.7},
      {"Call", {"call", "calledaway"}, 60.5},
      {"Carry", {"carry", "carrying"}, 73.7},
      {"Chat", {"chat", "chatting"}, 36.8},
      {"Deliver", {"deliver", "delivering"}, 50.0},
      {"Eat&Chat", {"eatchat", "eatandchat", "eatingandchatting"}, 86.8},
      {"HaveGuest", {"haveguest", "havingguest"}, 86.8},
      {"SeekHelp", {"seekhelp", "seekinghelp"}, 68.4},
      {"ShakeHands", {"shakehands", "shakinghands"}, 60.5},
      {"Show", {"show", "showing"}, 44.7},
  };
  return rows;
}

std::string format_percent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *fraction * 100.0);
  return buf;
}

namespace {

// Lowercase alphanumerics only, so "Eating-and-chatting" matches
// "eatingandchatting".
std::string fold_name(const std::string& s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

std::string fixed6(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string row(const std::string& name, const std::string& computed,
                const std::string& reference) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %10s %10s\n", name.c_str(),
                computed.c_str(), reference.c_str());
  return buf;
}

std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write report " + path.string());
  return out;
}

}  // namespace

void render_reports(const EvaluationReport& report,
                    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw InputError("cannot create report directory " + out_dir.string());

  const auto& classes = report.classes;
  long total = 0;
  for (const auto& s : report.splits) total += s.n_test;

  {
    auto out = open_report(out_dir / "accuracy.txt");
    out << "Leave-one-person-out evaluation, features: "
        << feature_set_name(report.features) << '\n'
        << "splits: " << report.splits.size() << ", test clips: " << total
        << ", skipped clips: " << report.skipped.size() << "\n\n";

    out << "Average accuracy\n" << row("", "computed", "reference");
    for (const auto& ref : reference_modalities()) {
      const bool ours = ref.aliases.front() == feature_set_name(report.features);
      out << row(ref.name, ours ? format_percent(report.overall_accuracy) : "-",
                 format_percent(ref.percent / 100.0));
    }

    out << "\nAccuracy per activity\n" << row("", "computed", "reference");
    std::set<std::string> matched;
    for (const auto& ref : reference_activities()) {
      std::string computed = "-";
      for (const auto& c : classes) {
        const std::string key = fold_name(c);
        if (std::find(ref.aliases.begin(), ref.aliases.end(), key) !=
            ref.aliases.end()) {
          computed = format_percent(report.per_class.at(c));
          matched.insert(c);
        }
      }
      out << row(ref.name, computed, format_percent(ref.percent / 100.0));
    }
    for (const auto& c : classes)
      if (!matched.count(c))
        out << row(c, format_percent(report.per_class.at(c)), "-");

    out << "\nAverage accuracy is clip-weighted: trace(confusion) / total test "
           "clips.\n"
        << "Per-activity accuracy is the mean over the splits whose test fold "
           "contains the activity; n/a if no test fold does.\n"
        << "Reference columns are OA2 benchmark results, for comparison "
           "only.\n";
  }

  {
    auto out = open_report(out_dir / "confusion.csv");
    out << "truth\\predicted";
    for (const auto& c : classes) out << ',' << c;
    out << '\n';
    for (std::size_t a = 0; a < classes.size(); ++a) {
      out << classes[a];
      for (std::size_t b = 0; b < classes.size(); ++b)
        out << ',' << report.confusion[a][b];
      out << '\n';
    }
  }

  {
    auto out = open_report(out_dir / "per_split.csv");
    out << "test_subject,n_test,n_correct,accuracy,best_C,best_gamma,"
           "cv_accuracy,folds";
    for (const auto& c : classes) out << ",acc_" << c;
    out << '\n';
    for (const auto& s : report.splits) {
      const std::optional<double> acc =
          s.n_test > 0 ? std::optional<double>(static_cast<double>(s.n_correct) /
                                               s.n_test)
                       : std::nullopt;
      char params[96];
      std::snprintf(params, sizeof params, "%.17g,%.17g", s.best_C, s.best_gamma);
      out << s.test_subject << ',' << s.n_test << ',' << s.n_correct << ','
          << fixed6(acc) << ',' << params << ',' << fixed6(s.cv_accuracy) << ','
          << s.folds_used;
      for (std::size_t c = 0; c < classes.size(); ++c)
        out << ',' << fixed6(s.class_accuracy(c));
      out << '\n';
    }
  }

  {
    auto out = open_report(out_dir / "predictions.csv");
    out << "clip_id,test_subject,truth,predicted\n";
    for (const auto& s : report.splits)
      for (const auto& p : s.predictions)
        out << p[0] << ',' << s.test_subject << ',' << p[1] << ',' << p[2] << '\n';
  }
}

}  // namespace isarec
