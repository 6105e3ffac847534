#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/common.hpp"
#include "forge/correction.hpp"
#include "forge/deficiency.hpp"
#include "forge/dissimilarity.hpp"
#include "forge/group.hpp"
#include "forge/io.hpp"
#include "forge/repair.hpp"
#include "forge/stability.hpp"
#include "forge/version.hpp"

namespace {

using forge::ojson;

ojson provenance(const std::string& input_bytes,
                 const std::vector<std::string>& args) {
  std::string flags;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) flags += ' ';
    flags += args[i];
  }
  return ojson{{"input_hash", forge::hex64(forge::fnv1a64(input_bytes))},
               {"flags", flags},
               {"version", forge::kVersion}};
}

void emit(const ojson& report, const std::string& out_path) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    forge::atomic_write_file(out_path, text);
}

std::vector<std::string> load_labels(const std::string& path) {
  if (path.empty()) return {};
  const ojson j = ojson::parse(forge::read_file(path), nullptr, true);
  if (!j.is_array())
    throw forge::ValidationError("label file must hold a JSON array");
  return j.get<std::vector<std::string>>();
}

forge::Dissimilarity load_matrix(const std::string& path,
                                 const std::string& labels_path,
                                 std::string* bytes_out) {
  const std::string bytes = forge::read_file(path);
  if (bytes_out) *bytes_out = bytes;
  return forge::Dissimilarity::from_values(forge::parse_matrix_csv(bytes),
                                           load_labels(labels_path));
}

std::vector<forge::Selector> parse_selector_list(const std::string& csv) {
  std::vector<forge::Selector> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok =
        csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!tok.empty()) out.push_back(forge::parse_selector(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw forge::ValidationError("empty selector list");
  return out;
}

forge::TDOracle pick_oracle(const std::string& name,
                            const std::string& table_path) {
  if (!name.empty() && !table_path.empty())
    throw forge::ValidationError("--oracle and --table are exclusive");
  if (!table_path.empty()) {
    const auto h = forge::Dissimilarity::from_values(
        forge::parse_matrix_csv(forge::read_file(table_path)));
    return forge::usc_envelope(forge::TDOracle::from_table(forge::compute_td(h)));
  }
  return forge::TDOracle::analytic(name.empty() ? "plus" : name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metric repair and double-limit stability toolkit"};
  app.require_subcommand(1);
  const std::vector<std::string> args(argv + 1, argv + argc);

  std::string input, labels_path, out_path, cert_path, table_path;
  std::string oracle_name, selectors = "all,evens,odds,tail";
  int depth = 0, bisect_iters = 60, window = 10, levels = 1;
  long long horizon = 200;
  double tol = 1e-6, at = 0;
  bool lift = true, closure = false, prescale = false, upper = false;
  bool case_check = false;
  std::uint64_t seed = 0;

  auto* check = app.add_subcommand("check", "triangle report for a CSV table");
  check->add_option("input", input)->required();
  check->add_option("--labels", labels_path);
  check->add_option("--out", out_path);
  check->callback([&] {
    std::string bytes;
    const auto h = load_matrix(input, labels_path, &bytes);
    ojson rep;
    rep["provenance"] = provenance(bytes, args);
    rep["n"] = h.size();
    rep["triangle"] = forge::check_triangle(h).to_json();
    emit(rep, out_path);
  });

  auto* td = app.add_subcommand("td", "triangle deficiency table");
  td->add_option("input", input)->required();
  td->add_option("--labels", labels_path);
  td->add_option("--out", out_path);
  td->callback([&] {
    std::string bytes;
    const auto h = load_matrix(input, labels_path, &bytes);
    const auto table = forge::compute_td(h);
    ojson rep;
    rep["provenance"] = provenance(bytes, args);
    rep["td"] = table.to_json();
    emit(rep, out_path);
  });

  auto* correct = app.add_subcommand("correct", "dyadic correction functions");
  correct->require_subcommand(1);
  auto* build = correct->add_subcommand("build", "construct dyadic radii");
  build->add_option("--oracle", oracle_name)
      ->check(CLI::IsMember({"plus", "sqplus", "max"}));
  build->add_option("--table", table_path);
  build->add_option("--depth", depth)->required();
  build->add_option("--bisect-iters", bisect_iters);
  build->add_option("--out", out_path);
  build->callback([&] {
    const auto g = pick_oracle(oracle_name, table_path);
    const auto radii = forge::build_radii(g, depth, bisect_iters);
    const forge::CorrectionFn f(radii);
    ojson rep;
    rep["provenance"] = provenance(
        table_path.empty() ? g.name() : forge::read_file(table_path), args);
    rep["oracle"] = g.name();
    rep["radii"] = radii.to_json();
    rep["epsilon"] = f.epsilon();
    std::vector<double> grid(64);
    for (int i = 0; i < 64; ++i) grid[static_cast<std::size_t>(i)] = 2.0 * i / 63;
    rep["verified"] = forge::verify_correction(f, g, grid).to_json();
    emit(rep, out_path);
  });
  auto* eval = correct->add_subcommand("eval", "evaluate a stored correction");
  std::string radii_path;
  eval->add_option("--radii", radii_path)->required();
  eval->add_option("--at", at)->required();
  eval->add_flag("--upper", upper);
  eval->callback([&] {
    const auto j = ojson::parse(forge::read_file(radii_path), nullptr, true);
    const forge::CorrectionFn f(forge::DyadicRadii::from_json(j));
    std::printf("%s\n",
                forge::format_double(upper ? f.upper_eval(at) : f.eval(at))
                    .c_str());
  });

  auto* repair = app.add_subcommand("repair", "repair a pre-metric");
  repair->add_option("input", input)->required();
  repair->add_option("--labels", labels_path);
  repair->add_option("--depth", depth);
  repair->add_flag("--lift,!--no-lift", lift);
  repair->add_flag("--closure", closure);
  repair->add_flag("--prescale", prescale);
  repair->add_option("--oracle", oracle_name)
      ->check(CLI::IsMember({"plus", "sqplus", "max"}));
  repair->add_option("--bisect-iters", bisect_iters);
  repair->add_option("--out", out_path);
  repair->add_option("--cert", cert_path);
  repair->callback([&] {
    std::string bytes;
    const auto h = load_matrix(input, labels_path, &bytes);
    forge::RepairOptions opt;
    if (depth > 0) opt.depth = depth;
    opt.lift = lift;
    opt.closure = closure;
    opt.prescale = prescale;
    opt.bisect_iters = bisect_iters;
    if (!oracle_name.empty()) opt.oracle = forge::TDOracle::analytic(oracle_name);
    const auto res = forge::repair(h, opt);
    if (!out_path.empty())
      forge::atomic_write_file(
          out_path, forge::format_matrix_csv(res.d1.size(), res.d1.flat()));
    ojson cert;
    cert["provenance"] = provenance(bytes, args);
    cert["certificate"] = res.certificate();
    cert["scale"] = res.scale;
    cert["closure"] = res.closure_used;
    if (!cert_path.empty())
      emit(cert, cert_path);
    else if (out_path.empty())
      emit(cert, "");
  });

  auto* stability = app.add_subcommand("stability", "double-limit reports");
  stability->add_option("input", input)->required();
  stability->add_option("--N", horizon);
  stability->add_option("--window", window);
  stability->add_option("--tol", tol);
  stability->add_option("--selectors", selectors);
  stability->add_flag("--cases", case_check);
  stability->add_option("--out", out_path);
  stability->callback([&] {
    const std::string bytes = forge::read_file(input);
    const auto spec = ojson::parse(bytes, nullptr, true);
    const auto seq = forge::make_seq_from_json(spec);
    ojson rep;
    rep["provenance"] = provenance(bytes, args);
    if (case_check)
      rep["cases"] =
          forge::divergence_case_check(*seq, horizon, window, tol).to_json();
    else
      rep["stability"] = forge::stability_defect(*seq, horizon, window, tol,
                                                 parse_selector_list(selectors))
                             .to_json();
    emit(rep, out_path);
  });

  auto* wap = app.add_subcommand("wap", "invariant sums on group models");
  wap->add_option("input", input)->required();
  wap->add_option("--levels", levels)->required();
  wap->add_option("--depth", depth);
  wap->add_option("--seed", seed);
  wap->add_option("--cert", cert_path);
  wap->add_option("--out", out_path);
  wap->callback([&] {
    const std::string bytes = forge::read_file(input);
    const auto model = forge::GroupModel::from_json(
        ojson::parse(bytes, nullptr, true));
    const auto res = forge::end_to_end(model, levels, depth, seed);
    if (!out_path.empty())
      forge::atomic_write_file(
          out_path,
          forge::format_matrix_csv(res.rep.d1.size(), res.rep.d1.flat()));
    ojson cert;
    cert["provenance"] = provenance(bytes, args);
    cert["certificate"] = res.certificate;
    if (!cert_path.empty())
      emit(cert, cert_path);
    else if (out_path.empty())
      emit(cert, "");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const forge::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const forge::ConstructionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ojson::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
