#include "rcb/dataset_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rcb::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kBinaryMagic[8] = {'R', 'C', 'B', 'D', 'A', 'Y', '0', '1'};

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& file, const std::string& bytes) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on " + file.string());
}

template <typename T>
void put_raw(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get_raw(const std::string& in, std::size_t& pos, const fs::path& file) {
    if (pos + sizeof(T) > in.size())
        throw std::runtime_error("truncated day file: " + file.string());
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

json day_header_json(const market::EnvironmentDay& day) {
    json h{{"type", "day_header"},
           {"day_id", day.day_id},
           {"budget", day.budget},
           {"roi_target", day.roi_target},
           {"horizon", day.num_slots()},
           {"split", day.split_tag},
           {"mech", day.mech_tag},
           {"slot_boundaries", day.slot_boundaries},
           {"auctions", day.auctions.size()}};
    if (day.pricing.kind == market::PricingKind::kMixed) {
        h["k_schedule"] = day.pricing.mix_schedule;
    }
    return h;
}

void apply_day_header(const json& h, market::EnvironmentDay& day, const fs::path& file) {
    day.day_id = h.at("day_id").get<int>();
    day.budget = h.at("budget").get<double>();
    day.roi_target = h.at("roi_target").get<double>();
    day.split_tag = h.at("split").get<std::string>();
    day.mech_tag = h.at("mech").get<std::string>();
    day.slot_boundaries = h.at("slot_boundaries").get<std::vector<int>>();
    if (h.contains("k_schedule")) {
        day.pricing = market::PricingRule::mixed(h.at("k_schedule").get<std::vector<double>>());
    } else {
        day.pricing = market::PricingRule::second_price();
    }
    const int horizon = h.at("horizon").get<int>();
    if (horizon != day.num_slots())
        throw std::runtime_error("inconsistent horizon in " + file.string());
}

}  // namespace

void save_day_text(const market::EnvironmentDay& day, const fs::path& file) {
    std::string out = day_header_json(day).dump();
    out.push_back('\n');
    for (const market::AuctionRecord& a : day.auctions) {
        out += json{{"u", a.utility_estimate}, {"ru", a.realized_utility}, {"m", a.market_price}}
                   .dump();
        out.push_back('\n');
    }
    spit(file, out);
}

void save_day_binary(const market::EnvironmentDay& day, const fs::path& file) {
    std::string out;
    out.append(kBinaryMagic, sizeof(kBinaryMagic));
    const std::string header = day_header_json(day).dump();
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    out.append(header);
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(day.auctions.size()));
    for (const market::AuctionRecord& a : day.auctions) put_raw(out, a.utility_estimate);
    for (const market::AuctionRecord& a : day.auctions) put_raw(out, a.realized_utility);
    for (const market::AuctionRecord& a : day.auctions) put_raw(out, a.market_price);
    spit(file, out);
}

market::EnvironmentDay load_day(const fs::path& file) {
    const std::string bytes = slurp(file);
    market::EnvironmentDay day;
    if (bytes.size() >= sizeof(kBinaryMagic) &&
        std::memcmp(bytes.data(), kBinaryMagic, sizeof(kBinaryMagic)) == 0) {
        std::size_t pos = sizeof(kBinaryMagic);
        const auto header_len = get_raw<std::uint32_t>(bytes, pos, file);
        if (pos + header_len > bytes.size())
            throw std::runtime_error("truncated day file: " + file.string());
        json h;
        try {
            h = json::parse(bytes.substr(pos, header_len));
        } catch (const json::exception& e) {
            throw std::runtime_error("bad day header in " + file.string() + ": " + e.what());
        }
        pos += header_len;
        apply_day_header(h, day, file);
        const auto n = get_raw<std::uint32_t>(bytes, pos, file);
        day.auctions.resize(n);
        for (std::uint32_t i = 0; i < n; ++i)
            day.auctions[i].utility_estimate = get_raw<double>(bytes, pos, file);
        for (std::uint32_t i = 0; i < n; ++i)
            day.auctions[i].realized_utility = get_raw<double>(bytes, pos, file);
        for (std::uint32_t i = 0; i < n; ++i)
            day.auctions[i].market_price = get_raw<double>(bytes, pos, file);
        for (std::uint32_t i = 0; i < n; ++i) day.auctions[i].index = static_cast<int>(i);
    } else {
        std::istringstream in(bytes);
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error("empty day file: " + file.string());
        json h;
        try {
            h = json::parse(line);
            if (h.at("type").get<std::string>() != "day_header")
                throw std::runtime_error("missing day_header record");
        } catch (const std::exception& e) {
            throw std::runtime_error("bad day header in " + file.string() + ": " + e.what());
        }
        apply_day_header(h, day, file);
        const auto n = h.at("auctions").get<std::size_t>();
        day.auctions.reserve(n);
        int index = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json r;
            try {
                r = json::parse(line);
            } catch (const json::exception& e) {
                throw std::runtime_error("bad auction record in " + file.string() + ": " +
                                         e.what());
            }
            market::AuctionRecord a;
            a.utility_estimate = r.at("u").get<double>();
            a.realized_utility = r.at("ru").get<double>();
            a.market_price = r.at("m").get<double>();
            a.index = index++;
            day.auctions.push_back(a);
        }
        if (day.auctions.size() != n)
            throw std::runtime_error("auction count mismatch in " + file.string());
    }
    day.validate();
    return day;
}

namespace {
std::string day_file_name(int day_id, bool binary) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "day_%04d.%s", day_id, binary ? "dayb" : "day");
    return buf;
}
}  // namespace

void save_dataset(const std::vector<market::EnvironmentDay>& days, const fs::path& dir,
                  bool binary) {
    fs::create_directories(dir);
    for (const market::EnvironmentDay& day : days) {
        const fs::path file = dir / day_file_name(day.day_id, binary);
        binary ? save_day_binary(day, file) : save_day_text(day, file);
    }
}

std::vector<market::EnvironmentDay> load_dataset(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".day" || ext == ".dayb") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<market::EnvironmentDay> days;
    days.reserve(files.size());
    for (const fs::path& f : files) days.push_back(load_day(f));
    std::sort(days.begin(), days.end(),
              [](const auto& a, const auto& b) { return a.day_id < b.day_id; });
    return days;
}

namespace {
json observation_json(const env::SlotObservation& o) {
    return json{{"tf", o.time_frac},     {"wr", o.win_rate},
                {"roi", o.roi},          {"cu", o.cum_utility},
                {"cc", o.cum_cost},      {"bf", o.budget_remaining_frac},
                {"pr", o.prev_ratio}};
}

env::SlotObservation observation_from_json(const json& j) {
    env::SlotObservation o;
    o.time_frac = j.at("tf").get<double>();
    o.win_rate = j.at("wr").get<double>();
    o.roi = j.at("roi").get<double>();
    o.cum_utility = j.at("cu").get<double>();
    o.cum_cost = j.at("cc").get<double>();
    o.budget_remaining_frac = j.at("bf").get<double>();
    o.prev_ratio = j.at("pr").get<double>();
    return o;
}
}  // namespace

void save_trajectories(const std::vector<env::Trajectory>& trajectories,
                       const fs::path& file) {
    std::string out;
    for (const env::Trajectory& traj : trajectories) {
        out += json{{"type", "episode"},
                    {"day_id", traj.day_id},
                    {"policy", traj.policy_tag},
                    {"horizon", traj.horizon},
                    {"budget", traj.budget},
                    {"roi_target", traj.roi_target},
                    {"truncated", traj.truncated},
                    {"steps", traj.steps.size()}}
                   .dump();
        out.push_back('\n');
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const env::StepRecord& s = traj.steps[t];
            out += json{{"type", "slot"},
                        {"day_id", traj.day_id},
                        {"policy", traj.policy_tag},
                        {"t", t},
                        {"o", observation_json(s.obs)},
                        {"a", s.action},
                        {"r", s.reward},
                        {"slot",
                         {{"u", s.slot.utility_sum},
                          {"c", s.slot.cost_sum},
                          {"w", s.slot.win_count},
                          {"n", s.slot_auctions}}}}
                       .dump();
            out.push_back('\n');
        }
    }
    spit(file, out);
}

std::vector<env::Trajectory> load_trajectories(const fs::path& file) {
    std::istringstream in(slurp(file));
    std::vector<env::Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "episode") {
            env::Trajectory traj;
            traj.day_id = j.at("day_id").get<int>();
            traj.policy_tag = j.at("policy").get<std::string>();
            traj.horizon = j.at("horizon").get<int>();
            traj.budget = j.at("budget").get<double>();
            traj.roi_target = j.at("roi_target").get<double>();
            traj.truncated = j.at("truncated").get<bool>();
            out.push_back(std::move(traj));
        } else if (type == "slot") {
            if (out.empty()) throw std::runtime_error("slot record before episode header");
            env::StepRecord s;
            s.obs = observation_from_json(j.at("o"));
            s.action = j.at("a").get<double>();
            s.reward = j.at("r").get<double>();
            s.slot.utility_sum = j.at("slot").at("u").get<double>();
            s.slot.cost_sum = j.at("slot").at("c").get<double>();
            s.slot.win_count = j.at("slot").at("w").get<int>();
            s.slot_auctions = j.at("slot").at("n").get<int>();
            out.back().steps.push_back(s);
        } else {
            throw std::runtime_error("unknown trajectory record type: " + type);
        }
    }
    // Recompute outcomes from the persisted steps.
    for (env::Trajectory& traj : out) {
        env::EpisodeOutcome& o = traj.outcome;
        o = env::EpisodeOutcome{};
        for (const env::StepRecord& s : traj.steps) {
            o.total_utility += s.slot.utility_sum;
            o.total_cost += s.slot.cost_sum;
        }
        o.roi = o.total_cost > 0.0 ? o.total_utility / o.total_cost
                                   : std::numeric_limits<double>::infinity();
        o.roi_feasible = o.roi >= traj.roi_target;
        o.truncated = traj.truncated;
        o.steps = traj.length();
    }
    return out;
}

void save_expert(const oracle::ExpertSolution& solution, const env::Trajectory& demo,
                 const fs::path& file) {
    json j{{"ratio_index", solution.ratio_index},
           {"ratios", solution.ratios},
           {"utility", solution.utility},
           {"cost", solution.cost},
           {"bound", solution.bound},
           {"gap", solution.gap},
           {"method", solution.method},
           {"converged", solution.converged},
           {"replay_gap_frac", solution.replay_gap_frac},
           {"flagged", solution.flagged},
           {"demo",
            {{"day_id", demo.day_id},
             {"horizon", demo.horizon},
             {"budget", demo.budget},
             {"roi_target", demo.roi_target},
             {"truncated", demo.truncated}}}};
    json steps = json::array();
    for (std::size_t t = 0; t < demo.steps.size(); ++t) {
        const env::StepRecord& s = demo.steps[t];
        steps.push_back(json{{"o", observation_json(s.obs)},
                             {"a", s.action},
                             {"r", s.reward},
                             {"slot",
                              {{"u", s.slot.utility_sum},
                               {"c", s.slot.cost_sum},
                               {"w", s.slot.win_count},
                               {"n", s.slot_auctions}}}});
    }
    j["demo"]["steps"] = std::move(steps);
    spit(file, j.dump(2) + "\n");
}

std::pair<oracle::ExpertSolution, env::Trajectory> load_expert(const fs::path& file) {
    json j;
    try {
        j = json::parse(slurp(file));
    } catch (const json::exception& e) {
        throw std::runtime_error("bad expert file " + file.string() + ": " + e.what());
    }
    oracle::ExpertSolution sol;
    sol.ratio_index = j.at("ratio_index").get<std::vector<int>>();
    sol.ratios = j.at("ratios").get<std::vector<double>>();
    sol.utility = j.at("utility").get<double>();
    sol.cost = j.at("cost").get<double>();
    sol.roi = sol.cost > 0.0 ? sol.utility / sol.cost
                             : std::numeric_limits<double>::infinity();
    sol.bound = j.at("bound").get<double>();
    sol.gap = j.at("gap").get<double>();
    sol.method = j.at("method").get<std::string>();
    sol.converged = j.at("converged").get<bool>();
    sol.replay_gap_frac = j.at("replay_gap_frac").get<double>();
    sol.flagged = j.at("flagged").get<bool>();

    const json& d = j.at("demo");
    env::Trajectory demo;
    demo.day_id = d.at("day_id").get<int>();
    demo.policy_tag = "expert";
    demo.horizon = d.at("horizon").get<int>();
    demo.budget = d.at("budget").get<double>();
    demo.roi_target = d.at("roi_target").get<double>();
    demo.truncated = d.at("truncated").get<bool>();
    for (const json& sj : d.at("steps")) {
        env::StepRecord s;
        s.obs = observation_from_json(sj.at("o"));
        s.action = sj.at("a").get<double>();
        s.reward = sj.at("r").get<double>();
        s.slot.utility_sum = sj.at("slot").at("u").get<double>();
        s.slot.cost_sum = sj.at("slot").at("c").get<double>();
        s.slot.win_count = sj.at("slot").at("w").get<int>();
        s.slot_auctions = sj.at("slot").at("n").get<int>();
        demo.steps.push_back(s);
    }
    env::EpisodeOutcome& o = demo.outcome;
    for (const env::StepRecord& s : demo.steps) {
        o.total_utility += s.slot.utility_sum;
        o.total_cost += s.slot.cost_sum;
    }
    o.roi = o.total_cost > 0.0 ? o.total_utility / o.total_cost
                               : std::numeric_limits<double>::infinity();
    o.roi_feasible = o.roi >= demo.roi_target;
    o.truncated = demo.truncated;
    o.steps = demo.length();
    return {std::move(sol), std::move(demo)};
}

std::uint64_t file_hash(const fs::path& file) { return fnv1a64(slurp(file)); }

std::uint64_t tree_hash(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const fs::path& f : files) {
        acc += f.filename().string();
        acc += ':';
        acc += std::to_string(file_hash(f));
        acc += '\n';
    }
    return fnv1a64(acc);
}

void write_manifest(const fs::path& dir, const json& fields) {
    json j = fields;
    j["code_version"] = kCodeVersion;
    spit(dir / "manifest.json", j.dump(2) + "\n");
}

json read_manifest(const fs::path& dir) {
    const fs::path file = dir / "manifest.json";
    if (!fs::exists(file))
        throw std::runtime_error("missing manifest in " + dir.string());
    return json::parse(slurp(file));
}

}  // namespace rcb::io
