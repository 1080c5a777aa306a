// Parallel kernels against their serial references on the desk fixture.
#include <benchmark/benchmark.h>

#include "kbforge/pipeline.hpp"
#include "kbforge/rng.hpp"

using namespace kbforge;

namespace {

struct Inputs {
    KnowledgeBase kb;
    std::vector<LogicalForm> forms;
    std::vector<QuestionRecord> gold;
    std::vector<Prediction> preds;
};

const Inputs& inputs() {
    static const Inputs in = [] {
        auto config = load_config(KBFORGE_FIXTURES "/desk/config.json");
        auto kb = load_kb(config.schema, config.facts);
        auto questions = read_dataset(config.questions, types_of(kb));
        std::vector<LogicalForm> forms;
        for (int rep = 0; rep < 20; ++rep)
            for (const auto& q : questions) forms.push_back(q.ideal_lf);
        std::vector<QuestionRecord> gold;
        auto state = run_degrade(questions, kb, config.degrade);
        for (int rep = 0; rep < 50; ++rep)
            for (auto q : state.questions()) {
                q.qid += "_" + std::to_string(rep);
                gold.push_back(std::move(q));
            }
        auto preds = make_reference_predictions(gold, {ReferenceMode::NoisyOracle, 0.3}, 1);
        return Inputs{std::move(kb), std::move(forms), std::move(gold), std::move(preds)};
    }();
    return in;
}

void BM_ExecuteBatch(benchmark::State& st) {
    const auto& in = inputs();
    for (auto _ : st) benchmark::DoNotOptimize(execute_batch(in.forms, in.kb));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.forms.size()));
}

void BM_ExecuteBatchSerial(benchmark::State& st) {
    const auto& in = inputs();
    for (auto _ : st) benchmark::DoNotOptimize(execute_batch_serial(in.forms, in.kb));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.forms.size()));
}

void BM_Evaluate(benchmark::State& st) {
    const auto& in = inputs();
    for (auto _ : st) benchmark::DoNotOptimize(evaluate(in.preds, in.gold));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.preds.size()));
}

void BM_EvaluateSerial(benchmark::State& st) {
    const auto& in = inputs();
    for (auto _ : st) benchmark::DoNotOptimize(evaluate_serial(in.preds, in.gold));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(in.preds.size()));
}

}  // namespace

BENCHMARK(BM_ExecuteBatch)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExecuteBatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
