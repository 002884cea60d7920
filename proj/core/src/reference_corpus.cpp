#include "ropocop/reference_corpus.hpp"

#include <cstdio>

namespace ropocop::synth {

namespace {

struct Row {
  std::uint64_t count;
  const char* avg; // "0" means not evaluated
  char series;
};

// x, y, series as published.
constexpr Row kRows[] = {
    {50, "2.5", 'b'}, {20, "1.9", 'b'}, {16, "2", 'b'},     {17, "2", 'b'},   {13, "2.2", 'b'},  {43, "2", 'b'},
    {49, "2.5", 'b'}, {46, "2.5", 'b'}, {48, "2.5", 'b'},   {50, "2", 'b'},   {50, "1.5", 'b'},  {4, "0", 'a'},
    {3, "0", 'a'},    {6, "0", 'a'},    {3, "0", 'a'},      {3, "0", 'a'},    {4, "0", 'a'},     {5, "0", 'a'},
    {7, "0", 'a'},    {8, "0", 'a'},    {6, "0", 'a'},      {3, "0", 'a'},    {3, "0", 'a'},     {31, "4", 'a'},
    {4, "0", 'a'},    {15, "3.91", 'a'}, {3, "0", 'a'},     {9, "0", 'a'},    {17, "4", 'a'},    {14, "0", 'c'},
    {14, "0", 'c'},   {14, "0", 'c'},   {29, "2.33", 'c'},  {8, "0", 'c'},    {9, "0", 'c'},     {40, "4.97", 'c'},
    {13, "0", 'c'},   {47, "4.14", 'c'}, {28, "4.1", 'c'},  {25, "4.14", 'c'}, {7, "0", 'c'},    {7, "0", 'c'},
    {7, "0", 'c'},    {11, "0", 'c'},   {5, "0", 'c'},
};

// The only exploit below the warm-up length; every other exploit is caught.
constexpr std::uint64_t kMissedExploitCount = 13;

std::vector<FeaturePoint> build() {
  std::vector<FeaturePoint> out;
  int per_series[3] = {0, 0, 0};
  for (const Row& r : kRows) {
    FeaturePoint p;
    p.series = static_cast<Series>(r.series);
    const int n = ++per_series[r.series - 'a'];
    char label[16];
    std::snprintf(label, sizeof(label), "%c%02d", r.series, n);
    p.label = label;
    p.count = r.count;
    const Ratio y = Ratio::parse(r.avg);
    if (y != Ratio(0)) p.avg = y;
    const bool malicious = p.series == Series::exploit && p.count != kMissedExploitCount;
    p.expected = malicious ? anticra::Classification::malicious : anticra::Classification::benign;
    out.push_back(std::move(p));
  }
  return out;
}

} // namespace

const std::vector<FeaturePoint>& reference_corpus() {
  static const std::vector<FeaturePoint> corpus = build();
  return corpus;
}

} // namespace ropocop::synth
