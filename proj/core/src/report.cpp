#include "uceval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "uceval/errors.hpp"

namespace uceval {

std::string format_fraction(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

namespace {

constexpr const char* cell_csv_header =
    "model,corpus,question_id,round,attack_id,behavioral,latent,"
    "trace_letter,emitted_letter,state";

std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\n\r") == std::string::npos) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        quoted += c;
        if (c == '"') quoted += '"';
    }
    quoted += '"';
    return quoted;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string render_latent(int latent) {
    if (latent < 0) return "N";
    return latent ? "1" : "0";
}

int parse_latent(const std::string& s) {
    if (s == "N") return -1;
    if (s == "1") return 1;
    if (s == "0") return 0;
    throw journal_error("bad latent field in cell CSV: " + s);
}

}  // namespace

std::size_t emit_cell_csv(const std::vector<CellRecord>& cells,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw journal_error("cannot write cell CSV: " + path);
    out << cell_csv_header << "\n";
    for (const auto& c : cells) {
        out << csv_field(c.model_id) << ',' << csv_field(c.corpus) << ','
            << csv_field(c.question_id) << ',' << c.round << ',' << c.attack_id
            << ',' << c.b << ',' << render_latent(c.latent) << ','
            << csv_field(c.trace_letter) << ',' << csv_field(c.emitted_letter)
            << ',' << to_string(c.state) << "\n";
    }
    return cells.size();
}

std::vector<CellRecord> read_cell_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw journal_error("cannot open cell CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw journal_error("empty cell CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != cell_csv_header)
        throw journal_error("unexpected cell CSV header: " + line);

    std::vector<CellRecord> cells;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 10)
            throw journal_error("bad cell CSV row: " + line);
        CellRecord c;
        c.model_id = f[0];
        c.corpus = f[1];
        c.question_id = f[2];
        c.round = std::stoi(f[3]);
        c.attack_id = std::stoi(f[4]);
        c.b = std::stoi(f[5]);
        c.latent = parse_latent(f[6]);
        c.trace_letter = f[7];
        c.emitted_letter = f[8];
        c.state = cell_state_from_string(f[9]);
        cells.push_back(std::move(c));
    }
    return cells;
}

Analysis analyze_cells(const std::vector<CellRecord>& cells) {
    std::map<std::pair<std::string, std::string>, std::vector<CellRecord>> groups;
    for (const auto& c : cells)
        groups[{c.corpus, c.model_id}].push_back(c);

    Analysis analysis;
    for (auto& [key, group] : groups) {
        std::stable_sort(group.begin(), group.end(),
                         [](const CellRecord& a, const CellRecord& b) {
                             if (a.question_id != b.question_id)
                                 return a.question_id < b.question_id;
                             return a.round < b.round;
                         });
        GroupAnalysis g;
        g.corpus = key.first;
        g.model = key.second;
        g.laff = laff_dataset(group);
        if (g.laff.n_committed > 0)
            g.estimate = laff_estimate(g.laff.k_latent_correct, g.laff.n_committed);
        g.series = per_round_uc(group);
        for (const auto& c : group)
            ++g.state_counts[static_cast<int>(c.state)];
        analysis.groups.push_back(std::move(g));
    }
    return analysis;
}

std::vector<std::string> emit_plot_data(const Analysis& analysis,
                                        const std::string& out_dir) {
    std::string bars_path = out_dir + "/laff_bars.csv";
    std::string series_path = out_dir + "/uc_by_round.csv";

    {
        std::ofstream out(bars_path, std::ios::binary);
        if (!out) throw journal_error("cannot write " + bars_path);
        out << "corpus,model,k,n,point,ci_lo,ci_hi,flip_rate,abstain_at_flip,"
               "r0_accuracy,questions\n";
        for (const auto& g : analysis.groups) {
            out << csv_field(g.corpus) << ',' << csv_field(g.model) << ','
                << g.estimate.k << ',' << g.estimate.n << ','
                << format_fraction(g.estimate.point) << ','
                << format_fraction(g.estimate.ci_lo) << ','
                << format_fraction(g.estimate.ci_hi) << ','
                << format_fraction(g.laff.flip_rate) << ','
                << g.laff.abstain_at_flip << ','
                << format_fraction(g.laff.r0_accuracy) << ',' << g.laff.questions
                << "\n";
        }
    }
    {
        std::ofstream out(series_path, std::ios::binary);
        if (!out) throw journal_error("cannot write " + series_path);
        out << "corpus,model,round,uc,committed,fraction\n";
        for (const auto& g : analysis.groups) {
            for (int r = 0; r < 8; ++r) {
                out << csv_field(g.corpus) << ',' << csv_field(g.model) << ','
                    << (r + 1) << ',' << g.series.uc[r] << ','
                    << g.series.committed[r] << ','
                    << format_fraction(g.series.fraction[r]) << "\n";
            }
        }
    }
    return {bars_path, series_path};
}

std::string analysis_summary(const Analysis& analysis) {
    std::ostringstream out;
    for (const auto& g : analysis.groups) {
        char line[256];
        std::snprintf(line, sizeof line,
                      "%s/%s: LAFF %d/%d = %.3f [%.3f, %.3f], flip rate %.3f "
                      "(%d abstain at flip), R0 acc %.3f over %d questions",
                      g.corpus.c_str(), g.model.c_str(), g.estimate.k,
                      g.estimate.n, g.estimate.point, g.estimate.ci_lo,
                      g.estimate.ci_hi, g.laff.flip_rate, g.laff.abstain_at_flip,
                      g.laff.r0_accuracy, g.laff.questions);
        out << line << "\n";
    }
    return out.str();
}

}  // namespace uceval
