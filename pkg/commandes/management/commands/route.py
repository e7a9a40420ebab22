"""
Simule le routage top-k d'une couche MoE et mesure la charge des experts.

Usage:
    python manage.py route --logits logits.csv --top-k 2
    python manage.py route --tokens 1000 --experts 8 --skew 0.5 --top-k 2 --seed 3
    python manage.py route ... --compare-skew 1.5      (répartition "après")
    python manage.py route ... --compare-logits apres.csv
"""
from commandes.base import CommandeEstimateur
from commandes.models import Section
from routage.models import RouterInput
from routage.services import (
    compare_loads, expert_load, load_logits_csv, route_topk, synthetic_logits,
)


class Command(CommandeEstimateur):
    help = "Répartition des tokens entre experts pour un routage top-k"

    def ajouter_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--logits', default=None, help="Logits CSV, une ligne par token")
        source.add_argument('--tokens', type=int, default=1000,
                            help="Nombre de tokens des logits synthétiques")
        parser.add_argument('--experts', type=int, default=8)
        parser.add_argument('--skew', type=float, default=0.0)
        parser.add_argument('--top-k', dest='top_k', type=int, default=2)
        parser.add_argument('--seed', type=int, default=0)
        comparaison = parser.add_mutually_exclusive_group()
        comparaison.add_argument('--compare-logits', dest='compare_logits', default=None)
        comparaison.add_argument('--compare-skew', dest='compare_skew', type=float, default=None)

    def _charge(self, logits, top_k):
        entree = RouterInput(logits=logits, top_k=top_k)
        return entree, expert_load(route_topk(entree), entree.num_experts)

    def executer(self, **options):
        if options['logits']:
            logits = load_logits_csv(options['logits'])
        else:
            logits = synthetic_logits(options['tokens'], options['experts'],
                                      options['seed'], options['skew'])
        entree, charge = self._charge(logits, options['top_k'])

        sections = [
            Section('statistiques',
                    ('tokens', 'experts', 'top_k', 'variance_pct', 'imbalance_factor'),
                    ((entree.num_tokens, entree.num_experts, entree.top_k,
                      charge.variance_pct, charge.imbalance_factor),)),
            Section('charge', ('expert', 'count', 'share_pct'),
                    tuple((e, n, p) for e, (n, p) in enumerate(zip(charge.counts,
                                                                   charge.shares_pct)))),
        ]

        if options['compare_logits'] or options['compare_skew'] is not None:
            if options['compare_logits']:
                apres_logits = load_logits_csv(options['compare_logits'])
            else:
                apres_logits = synthetic_logits(entree.num_tokens, entree.num_experts,
                                                options['seed'], options['compare_skew'])
            _, apres = self._charge(apres_logits, options['top_k'])
            ecart = compare_loads(charge, apres)
            sections += [
                Section('comparaison',
                        ('variance_before', 'variance_after', 'variance_delta', 'dominant_expert'),
                        ((charge.variance_pct, apres.variance_pct, ecart.variance_delta,
                          ecart.dominant_expert),)),
                Section('ecarts', ('expert', 'share_before', 'share_after', 'share_delta'),
                        tuple((e, avant, apres_part, delta) for e, (avant, apres_part, delta) in
                              enumerate(zip(charge.shares_pct, apres.shares_pct,
                                            ecart.share_deltas)))),
            ]
        return sections
