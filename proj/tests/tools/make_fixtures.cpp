// Regenerates the recorded cassettes under tests/fixtures/cassettes from
// script.json. Run after changing a bundled template or schema:
//   build/tests/matforge_make_fixtures

#include <iostream>

#include "fixture_env.hpp"
#include "matforge/pipeline.hpp"
#include "scripted_transport.hpp"

using namespace matforge;
using namespace matforge::testing;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<LlmGateway> recorder(const fs::path& cassette, std::shared_ptr<ScriptedTransport> transport) {
  fs::remove(cassette);
  GatewayConfig c;
  c.model_name = kFixtureModel;
  c.mode = GatewayMode::kRecord;
  c.cassette_path = cassette;
  c.max_retries = 0;
  return std::make_shared<LlmGateway>(c, std::move(transport));
}

int check(const RunManifest& m) {
  int bad = 0;
  for (const auto& d : m.docs)
    if (d.value("status", "") != "ok") {
      std::cerr << m.run_id << " " << d.dump() << "\n";
      ++bad;
    }
  return bad;
}

}  // namespace

int main() {
  const fs::path fx = fixture_dir();
  const auto script = load_script(fx / "cassettes" / "script.json");
  const EntitySchema schema = load_schema_file((data_dir() / "schemas" / "materials.json").string());
  const TemplateStore templates = TemplateStore::load_dir(data_dir() / "templates");
  const fs::path scratch = fs::temp_directory_path() / "matforge-fixtures";
  fs::remove_all(scratch);
  int bad = 0;

  {
    auto gw = recorder(fx / "cassettes" / "pipeline.jsonl", std::make_shared<ScriptedTransport>(script));
    const auto corpus = load_raw_jsonl(read_file(fx / "pipeline" / "corpus.jsonl"));
    for (RunMode mode : {RunMode::kHybrid, RunMode::kDirect}) {
      RunConfig cfg;
      cfg.mode = mode;
      cfg.run_id = std::string(to_string(mode));
      bad += check(run(corpus, schema, templates, cfg, *gw, RunStore(scratch / "pipeline")));
    }
  }

  {
    auto gw = recorder(fx / "cassettes" / "stages.jsonl", std::make_shared<ScriptedTransport>(script));
    RunConfig cfg;
    for (const char* text : {"nano platinum is used as a catalyst", "The samples were stored overnight.",
                             "Nanostructured Al2O3 is used in solar cells."}) {
      const auto r = annotate_doc("d", text, schema, templates, cfg, *gw);
      if (r.status == StageStatus::kFailed) ++bad;
    }
    if (construct_kg("d", "<DSC>Nanostructured</DSC> <MAT>Al2O3</MAT> films were deposited on glass.", schema,
                     templates, cfg, *gw)
            .status != StageStatus::kOk)
      ++bad;
    RunConfig one_repair = cfg;
    one_repair.max_repair_attempts = 1;
    construct_kg("d", "This text yields no graph.", schema, templates, one_repair, *gw);

    const auto review_corpus = load_raw_jsonl(read_file(fx / "review" / "corpus.jsonl"));
    bad += check(run(review_corpus, schema, templates, cfg, *gw, RunStore(scratch / "review")));
    const EntitySchema v2 = load_schema_file((fx / "review" / "materials_v2.json").string());
    const auto r = process_doc(review_corpus.at(0), v2, templates, cfg, *gw);
    if (r.status != StageStatus::kOk) ++bad;
  }

  fs::remove_all(scratch);
  if (bad) {
    std::cerr << bad << " fixture stage(s) did not come out ok\n";
    return 1;
  }
  std::cout << "cassettes written to " << (fx / "cassettes").string() << "\n";
  return 0;
}
