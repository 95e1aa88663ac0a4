# Regenerates the GIN parity fixtures in tests/fixtures from an independent
# PyTorch forward pass. Run from the repository root; needs torch.
import json, torch
torch.manual_seed(2024)
torch.set_default_dtype(torch.float64)
D_IN, H, L = 6, 8, 5
class GIN(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.eps = [0.0, 0.1, -0.2, 0.5, 0.0]
        self.mlps = torch.nn.ModuleList()
        for k in range(L):
            self.mlps.append(torch.nn.Sequential(torch.nn.Linear(D_IN if k == 0 else H, H), torch.nn.ReLU(),
                                                 torch.nn.Linear(H, H), torch.nn.ReLU()))
    def forward(self, x, a):
        pools = []
        for k in range(L):
            x = self.mlps[k]((1 + self.eps[k]) * x + a @ x)
            pools.append(x.sum(0))
        return torch.cat(pools)
m = GIN()
layers = []
for k in range(L):
    l1, l2 = m.mlps[k][0], m.mlps[k][2]
    layers.append({"eps": m.eps[k], "w1": l1.weight.tolist(), "b1": l1.bias.tolist(),
                   "w2": l2.weight.tolist(), "b2": l2.bias.tolist()})
json.dump({"layers": layers}, open("tests/fixtures/gin_weights.json", "w"))
graphs = [
    (4, [[0, 1], [1, 2], [2, 3]], True),
    (5, [[0, 1], [0, 2], [0, 3], [0, 4]], False),
    (6, [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3], [2, 3]], True),
    (3, [], False),
    (7, [[i, j] for i in range(7) for j in range(i + 1, 7) if (i + j) % 3 != 0], True),
]
g = torch.Generator().manual_seed(7)
lines, golden = [], []
for idx, (n, edges, feat) in enumerate(graphs):
    a = torch.zeros(n, n)
    for u, v in edges:
        a[u, v] = a[v, u] = 1
    rec = {"num_nodes": n, "edges": edges, "label": idx % 2, "s_pre": round(0.1 * (idx + 1), 3)}
    if feat:
        x = torch.rand(n, D_IN, generator=g)
        rec["features"] = x.tolist()
    else:
        deg = a.sum(1).long().clamp(max=D_IN - 1)
        x = torch.nn.functional.one_hot(deg, D_IN).double()
        rec["features"] = None
    lines.append(rec)
    with torch.no_grad():
        golden.append(m(x, a).tolist())
# dataset keys must be consistent per line, so featureless graphs carry explicit degree one-hots
for rec, (n, edges, feat) in zip(lines, graphs):
    if rec["features"] is None:
        a = torch.zeros(n, n)
        for u, v in edges:
            a[u, v] = a[v, u] = 1
        deg = a.sum(1).long().clamp(max=D_IN - 1)
        rec["features"] = torch.nn.functional.one_hot(deg, D_IN).double().tolist()
with open("tests/fixtures/golden_graphs.jsonl", "w") as f:
    for rec in lines:
        f.write(json.dumps(rec) + "\n")
json.dump({"embedding_dim": L * H, "embeddings": golden}, open("tests/fixtures/golden_embeddings.json", "w"))
