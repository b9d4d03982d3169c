#include "mlenkf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "mlenkf/errors.hpp"

namespace mlenkf {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    require(ec == std::errc() && ptr == text.data() + text.size() && !text.empty(),
            "config: bad value '" + std::string(text) + "' for " + std::string(key));
    return value;
}

}  // namespace

std::vector<double> parse_eps_list(std::string_view text) {
    std::vector<double> eps;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = trim(text.substr(0, comma));
        if (!item.empty()) {
            const double e = parse_number<double>("eps", item);
            require(e > 0.0, "config: eps values must be positive");
            eps.push_back(e);
        }
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    require(!eps.empty(), "config: eps list is empty");
    return eps;
}

void apply_setting(ExperimentOptions& o, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "example") {
        o.example = parse_number<int>(key, value);
        require(o.example == 1 || o.example == 2, "config: example must be 1 or 2");
    } else if (key == "method") {
        o.method = parse_method(value);
    } else if (key == "solver") {
        o.solver = parse_solver(value);
    } else if (key == "eps") {
        o.eps = parse_eps_list(value);
    } else if (key == "realizations") {
        o.realizations = parse_number<std::size_t>(key, value);
        require(o.realizations >= 2, "config: realizations must be at least 2");
    } else if (key == "seed") {
        o.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "n_ref") {
        o.n_ref = parse_number<std::size_t>(key, value);
        require(o.n_ref >= 1, "config: n_ref must be positive");
    } else if (key == "jobs") {
        o.jobs = parse_number<unsigned>(key, value);
        require(o.jobs >= 1, "config: jobs must be positive");
    } else if (key == "steps") {
        o.steps = parse_number<std::size_t>(key, value);
        require(o.steps >= 1, "config: steps must be positive");
    } else if (key == "schedule_constant") {
        o.schedule_constant = parse_number<double>(key, value);
        require(o.schedule_constant > 0.0, "config: schedule_constant must be positive");
    } else if (key == "n0") {
        o.n0 = parse_number<std::size_t>(key, value);
        require(o.n0 >= 1, "config: n0 must be positive");
    } else if (key == "j0") {
        o.j0 = parse_number<std::size_t>(key, value);
        require(o.j0 >= 1, "config: j0 must be positive");
    } else {
        throw ContractViolation("config: unknown key '" + std::string(key) + "'");
    }
}

ExperimentOptions parse_config_text(std::string_view text, ExperimentOptions base) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        ++line_no;
        if (!line.empty() && line.front() != '#') {
            const auto eq = line.find('=');
            require(eq != std::string_view::npos,
                    "config line " + std::to_string(line_no) + ": expected key = value");
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        }
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return base;
}

ExperimentOptions load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "config: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace mlenkf
