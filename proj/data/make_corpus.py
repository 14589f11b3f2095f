"""Writes corpus.smi: Kekule SMILES of a hand-picked drug-like set.

Run once with RDKit available; the output is committed, so building and
testing never need RDKit.
"""
import sys

from rdkit import Chem

SOURCE = """
CC(=O)Oc1ccccc1C(=O)O aspirin
CC(=O)Nc1ccc(O)cc1 paracetamol
CC(C)Cc1ccc(cc1)C(C)C(=O)O ibuprofen
COc1ccc2cc(ccc2c1)C(C)C(=O)O naproxen
CN1C=NC2=C1C(=O)N(C(=O)N2C)C caffeine
CN1CCC[C@H]1c1cccnc1 nicotine
OC(=O)c1ccccc1O salicylic_acid
CN(C)C(=N)N=C(N)N metformin
NCCc1ccc(O)c(O)c1 dopamine
NCCc1c[nH]c2ccc(O)cc12 serotonin
CNC[C@H](O)c1ccc(O)c(O)c1 epinephrine
CC(C)NCC(O)COc1cccc2ccccc12 propranolol
CC(C)NCC(O)COc1ccc(CC(N)=O)cc1 atenolol
COCCc1ccc(OCC(O)CNC(C)C)cc1 metoprolol
CC(C)(C)NCC(O)c1ccc(O)c(CO)c1 salbutamol
CN1CCN(CC1)C1=Nc2cc(Cl)ccc2Nc2ccccc12 clozapine
CN1CCN(CC1)C1=Nc2ccccc2Sc2ccc(Cl)cc12 clotiapine
CN(C)CCCN1c2ccccc2CCc2ccccc12 imipramine
CNCCCN1c2ccccc2CCc2ccccc12 desipramine
CN(C)CCC=C1c2ccccc2CCc2ccccc12 amitriptyline
CN(C)CCCN1c2ccccc2Sc2ccc(Cl)cc12 chlorpromazine
CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc12 diazepam
OC1N=C(c2ccccc2)c2cc(Cl)ccc2NC1=O oxazepam
Cc1ncc2n1-c1ccc(Cl)cc1C(c1ccccc1F)=NC2 midazolam
Cc1nnc2n1-c1ccc(Cl)cc1C(c1ccccc1)=NC2 alprazolam
CNCCC(Oc1ccc(cc1)C(F)(F)F)c1ccccc1 fluoxetine
CN[C@H]1CC[C@@H](c2ccc(Cl)c(Cl)c2)c2ccccc12 sertraline
Fc1ccc(cc1)[C@@H]1CCNC[C@H]1COc1ccc2OCOc2c1 paroxetine
CN(C)CC1CCCCC1(O)c1cccc(OC)c1 tramadol_core
COc1ccc2[nH]cc(CCNC(C)=O)c2c1 melatonin
CC(=O)NC1=NN=C(S1)S(N)(=O)=O acetazolamide
NS(=O)(=O)c1cc(C(=O)O)c(NCc2ccco2)cc1Cl furosemide
NS(=O)(=O)c1cc2c(cc1Cl)NCNS2(=O)=O hydrochlorothiazide
CCCCc1oc2ccccc2c1C(=O)c1cc(I)c(OCCN(CC)CC)c(I)c1 amiodarone
Cc1ccc(cc1)S(=O)(=O)NC(=O)NCCCC tolbutamide
COc1ccc2nc(S(=O)Cc3ncc(C)c(OC)c3C)[nH]c2c1 omeprazole
CN(C)C(=O)C(CCN1CCC(O)(CC1)c1ccc(Cl)cc1)(c1ccccc1)c1ccccc1 loperamide
CC1=C(C(=O)Nc2ccccn2)N(C)S(=O)(=O)c2ccccc12 piroxicam
OC(=O)Cc1ccccc1Nc1c(Cl)cccc1Cl diclofenac
Cc1cc(NS(=O)(=O)c2ccc(N)cc2)no1 sulfamethoxazole
COc1cc(Cc2cnc(N)nc2N)cc(OC)c1OC trimethoprim
Nc1ccc(cc1)S(=O)(=O)Nc1ncccn1 sulfadiazine
CC1(C)S[C@@H]2[C@H](NC(=O)Cc3ccccc3)C(=O)N2[C@H]1C(=O)O penicillin_g
CC1(C)S[C@@H]2[C@H](NC(=O)[C@H](N)c3ccc(O)cc3)C(=O)N2[C@H]1C(=O)O amoxicillin
OC(=O)C1=CN(C2CC2)c2cc(N3CCNCC3)c(F)cc2C1=O ciprofloxacin
CC1COc2c(N3CCN(C)CC3)c(F)cc3C(=O)C(C(=O)O)=CN1c23 ofloxacin
Cc1ncc([N+](=O)[O-])n1CCO metronidazole
OC(Cn1cncn1)(Cn1cncn1)c1ccc(F)cc1F fluconazole
Clc1ccc(COC(Cn2ccnc2)c2ccc(Cl)cc2Cl)c(Cl)c1 miconazole
NC(=O)c1cnccn1 pyrazinamide
NNC(=O)c1ccncc1 isoniazid
CC[C@H](CO)NCCN[C@H](CC)CO ethambutol
Nc1nc(=O)n(cc1)[C@@H]1O[C@H](CO)[C@@H](O)[C@@H]1O cytarabine
Cc1cn([C@H]2C[C@H](N=[N+]=[N-])[C@@H](CO)O2)c(=O)[nH]c1=O zidovudine
Nc1nc2n(COCCO)cnc2c(=O)[nH]1 acyclovir
CCCN(CCC)C(=O)Cc1c(nc2ccc(C)cn12)-c1ccc(C)cc1 alpidem_like
Cc1ccc(cc1)-c1cc(nn1-c1ccc(cc1)S(N)(=O)=O)C(F)(F)F celecoxib
CS(=O)(=O)c1ccc(cc1)C1=C(C(=O)OC1)c1ccccc1 rofecoxib
CC(C)C(=O)c1c(C)n(C)c2ccccc12 indole_ketone
COc1ccc2n(C(=O)c3ccc(Cl)cc3)c(C)c(CC(=O)O)c2c1 indomethacin
CC(C(=O)O)c1cccc(c1)C(=O)c1ccccc1 ketoprofen
CC(C(=O)O)c1ccc(c(F)c1)-c1ccccc1 flurbiprofen
OC(=O)c1ccccc1Nc1cccc(c1)C(F)(F)F flufenamic_acid
Cc1cccc(Nc2ccccc2C(=O)O)c1C mefenamic_acid
CCOC(=O)C1=C(COCCN)NC(C)=C(C1c1ccccc1Cl)C(=O)OC amlodipine
COC(=O)C1=C(C)NC(C)=C(C1c1ccccc1[N+](=O)[O-])C(=O)OC nifedipine
COc1ccc(CCN(C)CCCC(C#N)(C(C)C)c2ccc(OC)c(OC)c2)cc1OC verapamil
CCCCc1nc(Cl)c(CO)n1Cc1ccc(cc1)-c1ccccc1-c1nn[nH]n1 losartan
CCCCC(=O)N(Cc1ccc(cc1)-c1ccccc1-c1nn[nH]n1)[C@@H](C(C)C)C(=O)O valsartan
CCOC(=O)[C@H](CCc1ccccc1)N[C@@H](C)C(=O)N1CCC[C@H]1C(=O)O enalapril
C[C@H](CS)C(=O)N1CCC[C@H]1C(=O)O captopril
NCCCC[C@H](N[C@@H](CCc1ccccc1)C(=O)O)C(=O)N1CCC[C@H]1C(=O)O lisinopril
CC(C)c1c(C(=O)Nc2ccccc2)c(-c2ccccc2)c(-c2ccc(F)cc2)n1CC[C@@H](O)C[C@@H](O)CC(=O)O atorvastatin
CC[C@H](C)C(=O)O[C@H]1C[C@@H](C)C=C2C=C[C@H](C)[C@H](CC[C@@H]3C[C@@H](O)CC(=O)O3)[C@@H]12 lovastatin
CC(C)(C)c1ccc(cc1)C(O)CCCN1CCC(CC1)C(O)(c1ccccc1)c1ccccc1 terfenadine
CN1CCC(CC1)=C1c2ccccc2C=Cc2ccccc12 cyproheptadine
CN(C)CCOC(c1ccccc1)c1ccccc1 diphenhydramine
CN(C)CCC(c1ccc(Cl)cc1)c1ccccn1 chlorphenamine
OC(=O)COCCN1CCN(CC1)C(c1ccccc1)c1ccc(Cl)cc1 cetirizine
CCOC(=O)N1CCC(CC1)=C1c2ccc(Cl)cc2CCc2cccnc12 loratadine
CSCC[C@H](NC(=O)[C@H](Cc1ccccc1)NC(=O)CN)C(=O)O met_peptide
N[C@@H](Cc1ccccc1)C(=O)O phenylalanine
N[C@@H](Cc1ccc(O)cc1)C(=O)O tyrosine
N[C@@H](Cc1c[nH]c2ccccc12)C(=O)O tryptophan
N[C@@H](Cc1cnc[nH]1)C(=O)O histidine
N[C@@H](CCCNC(N)=N)C(=O)O arginine
N[C@@H](CS)C(=O)O cysteine
CSCC[C@H](N)C(=O)O methionine
N[C@@H](CCC(=O)O)C(=O)O glutamic_acid
OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O glucose
OC[C@H]1O[C@@](CO)(O)[C@@H](O)[C@@H]1O fructose_like
OC(=O)CC(O)(CC(=O)O)C(=O)O citric_acid
CC(O)C(=O)O lactic_acid
OC(=O)CCC(=O)O succinic_acid
O=C1NC(=O)c2ccccc12 phthalimide
O=C1CCCN1 pyrrolidone
O=C1NC(=O)C(N1)(c1ccccc1)c1ccccc1 phenytoin
CCC1(C(=O)NC(=O)NC1=O)c1ccccc1 phenobarbital
NC(=O)N1c2ccccc2C=Cc2ccccc12 carbamazepine
CCCC(CCC)C(=O)O valproic_acid
NCC1(CC(=O)O)CCCCC1 gabapentin
CC(C)C[C@H](CN)CC(=O)O pregabalin
Nc1nc(N)c2nc(-c3ccccc3)c(N)nc2n1 triamterene
CN1C(=O)N(C)c2nc[nH]c2C1=O theophylline
Cn1cnc2c1c(=O)[nH]c(=O)n2C theobromine
O=c1[nH]cnc2[nH]ncc12 allopurinol
Nc1ncnc2[nH]cnc12 adenine
Nc1nc2[nH]cnc2c(=O)[nH]1 guanine
O=c1cc[nH]c(=O)[nH]1 uracil
Cc1c[nH]c(=O)[nH]c1=O thymine
Nc1cc[nH]c(=O)n1 cytosine
O=C(O)c1cccnc1 nicotinic_acid
NC(=O)c1cccnc1 nicotinamide
Cc1ncc(CO)c(CO)c1O pyridoxine
CC1=C(C=CC(C)=CC=CC(C)=CCO)C(C)(C)CCC1 retinol
CC(C)CCCC(C)CCCC(C)CCCC1(C)CCc2c(C)c(O)c(C)c(C)c2O1 tocopherol
OC[C@H](O)[C@H]1OC(=O)C(O)=C1O ascorbic_acid
Cc1cc2nc3c(=O)[nH]c(=O)nc-3n(C[C@H](O)[C@H](O)[C@H](O)CO)c2cc1C riboflavin
COc1cc2c(cc1OC)C(=O)C(CC1CCN(Cc3ccccc3)CC1)C2 donepezil
CN1C2CCC1CC(C2)OC(=O)C(CO)c1ccccc1 atropine
COC(=O)C1C(CC2CCC1N2C)OC(=O)c1ccccc1 cocaine
CN1CC[C@]23c4c5ccc(O)c4O[C@H]2[C@@H](O)C=C[C@H]3[C@H]1C5 morphine
COc1ccc2C[C@H]3N(C)CC[C@@]45[C@@H](Oc1c24)[C@@H](O)C=C[C@@H]35 codeine
CCN(CC)C(=O)[C@H]1CN(C)[C@@H]2Cc3c[nH]c4cccc(C2=C1)c34 lsd
CCC(=O)N(c1ccccc1)C1CCN(CCc2ccccc2)CC1 fentanyl
CN(C)CC(c1ccc(O)cc1)C1(O)CCCCC1 desvenlafaxine
COc1ccc(cc1)C(CN(C)C)C1(O)CCCCC1 venlafaxine
CC(N)Cc1ccccc1 amphetamine
CNC(C)Cc1ccccc1 methamphetamine
CNC(C)Cc1ccc2OCOc2c1 mdma
COc1cc(CCN)cc(OC)c1OC mescaline
CN(C)CCc1c[nH]c2ccc(CS(=O)(=O)N3CCCC3)cc12 almotriptan
CNS(=O)(=O)Cc1ccc2[nH]cc(CCN(C)C)c2c1 sumatriptan
CC(C)N(CCC(C(N)=O)(c1ccccc1)c1ccccn1)C(C)C disopyramide
CCN(CC)CC(=O)Nc1c(C)cccc1C lidocaine
CCCCN1CCCCC1C(=O)Nc1c(C)cccc1C bupivacaine
CCN(CC)CCOC(=O)c1ccc(N)cc1 procaine
CCCCNc1ccc(cc1)C(=O)OCCN(C)C tetracaine
CC(C)Oc1ccc(cc1)C(C)(C)c1ccc(OCC(O)CO)cc1 bisphenol_ether
Oc1ccc(cc1)C(c1ccc(O)cc1)(C)C bisphenol_a
Clc1ccc(cc1)C(c1ccc(Cl)cc1)C(Cl)(Cl)Cl ddt
Oc1c(Cl)cc(Cl)cc1Cc1cc(Cl)cc(Cl)c1O dichlorophen
Oc1ccc(Cl)cc1Oc1ccc(Cl)cc1Cl triclosan
ClC(Cl)(Cl)C(O)O chloral_hydrate
FC(F)(F)C(Cl)Br halothane
FC(F)OC(F)(F)C(F)Cl enflurane
BrCCBr dibromoethane
ICCCI diiodopropane
CC(C)(C)c1cc(C)c(O)c(c1)C(C)(C)C bht_like
C#Cc1cccc(Nc2ncnc3cc(OCCOC)c(OCCOC)cc23)c1 erlotinib
COc1cc2ncnc(Nc3ccc(F)c(Cl)c3)c2cc1OCCCN1CCOCC1 gefitinib
Cc1ccc(NC(=O)c2ccc(CN3CCN(C)CC3)cc2)cc1Nc1nccc(n1)-c1cccnc1 imatinib
CN(C)C/C=C/C(=O)Nc1cc2c(Nc3ccc(F)c(Cl)c3)ncnc2cc1O[C@H]1CCOC1 afatinib
CC1=C(C(=O)Nc2ccc(cc2)C)C(c2ccc(F)cc2)NC(=O)N1 dhpm
CCOc1ccc(cc1)NC(C)=O phenacetin
CC(=O)Nc1ccc(OC(=O)c2ccccc2OC(C)=O)cc1 benorilate
Oc1ccccc1C(=O)OCc1ccccc1 benzyl_salicylate
COC(=O)c1ccccc1N methyl_anthranilate
O=C(OCC)c1ccc(N)cc1 benzocaine
CCCCCCCCCCCCCCCC(=O)O palmitic_acid
CCCCCCCC/C=C\\CCCCCCCC(=O)O oleic_acid
OCC(O)CO glycerol
C1CCOC1 thf
C1COCCO1 dioxane
C1CCNCC1 piperidine
C1CNCCN1 piperazine
C1COCCN1 morpholine
c1ccncc1 pyridine
c1ccc2ccccc2c1 naphthalene
c1ccc2cc3ccccc3cc2c1 anthracene
c1ccc2c(c1)ccc1ccccc12 phenanthrene
c1ccc2[nH]ccc2c1 indole
c1ccc2ncccc2c1 quinoline
c1ccc2cnccc2c1 isoquinoline
c1cnc2[nH]ccc2c1 azaindole
c1ccsc1 thiophene
c1ccoc1 furan
c1cc[nH]c1 pyrrole
c1ncc[nH]1 imidazole
c1cn[nH]c1 pyrazole
c1cscn1 thiazole
c1cocn1 oxazole
c1nnc[nH]1 triazole
c1ccc(cc1)-c1ccccc1 biphenyl
O=C(c1ccccc1)c1ccccc1 benzophenone
O=C1c2ccccc2C(=O)c2ccccc12 anthraquinone
O=c1ccc2ccccc2o1 coumarin
CC(=O)CC(c1ccccc1)C1=C(O)c2ccccc2OC1=O warfarin
O=C1C(=O)c2ccccc2N1 isatin
O=C1c2ccccc2-c2ccccc12 fluorenone
S=C(N)N thiourea
NC(N)=O urea
CC(=O)N(C)C dimethylacetamide
CS(C)=O dmso
CN(C)C=O dmf
C=CC(=O)OC methyl_acrylate
C=Cc1ccccc1 styrene
C#N.placeholder skip
CC#N acetonitrile
N#Cc1ccccc1 benzonitrile
CC(C)=O acetone
CCOCC diethyl_ether
OP(O)(O)=O phosphoric_acid
COP(=O)(OC)OC trimethyl_phosphate
CCOP(=S)(OCC)Oc1ccc(cc1)[N+](=O)[O-] parathion
COP(=S)(OC)SCC(=O)NC dimethoate
CCOC(=O)CC(SP(=S)(OC)OC)C(=O)OCC malathion
OC(=O)CN(CP(O)(O)=O) glyphosate_like
OB(O)c1ccccc1 phenylboronic_acid
CC1(C)OB(OC1(C)C)c1ccccc1 phenyl_bpin
OB(O)c1cccc(c1)C(=O)O carboxyphenylboronic
CC(C)C[C@H](NC(=O)[C@@H](Cc1ccccc1)NC(=O)c1cnccn1)B(O)O bortezomib
C[N+](C)(C)CCO choline
C[N+](C)(C)CC(=O)[O-] betaine
CC(=O)OCC[N+](C)(C)C acetylcholine
[O-][N+](=O)c1ccc(cc1)C(=O)O nitrobenzoic_acid
Nc1ccc(cc1)[N+](=O)[O-] nitroaniline
O=[N+]([O-])c1cc(cc(c1)[N+](=O)[O-])[N+](=O)[O-] trinitrobenzene
Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-] tnt
OCC1OC(OC2C(O)C(O)C(O)OC2CO)C(O)C(O)C1O lactose_like
CC(C)NCC(O)c1ccc(NS(C)(=O)=O)cc1 sotalol
CCCS(=O)(=O)Nc1ccc(F)c(C(=O)c2c[nH]c3ncc(cc23)-c2ccc(Cl)cc2)c1F vemurafenib
CN1CCN(CC1)c1ccc2nc([nH]c2c1)-c1ccc2[nH]c(nc2c1)-c1ccc(O)cc1 hoechst_like
O=C(NC1CC1)c1ccc(cc1)-n1cccn1 amide_fragment
CC(C)n1cnc2c(Nc3cccc(Cl)c3)nc(NCCO)nc12 purvalanol_like
O=S(=O)(Nc1ccccn1)c1ccc(N)cc1 sulfapyridine
CS(=O)(=O)N1CCN(CC1)Cc1ccc(cc1)C(F)(F)F sulfonyl_piperazine
Brc1ccc(cc1)C(=O)NCC(=O)O bromohippuric
Ic1ccccc1C(=O)O iodobenzoic
Fc1ccc(cc1)C(=O)CCCN1CCC(O)(CC1)c1ccc(Cl)cc1 haloperidol
O=C1CN=C(c2ccccc2F)c2cc(ccc2N1)[N+](=O)[O-] flunitrazepam_nor
CC(=O)OC1=CC(=O)OC(C)=C1 dehydroacetic_like
CCC(C)(C)C(=O)OC1CC(C)C=C2C=CC(C)C(CCC3CC(O)CC(=O)O3)C12 simvastatin
CC12CCC3c4ccc(O)cc4CCC3C1CCC2O estradiol
CC12CCC3C(CCC4=CC(=O)CCC34C)C1CCC2O testosterone
CC12CCC(=O)C=C1CCC1C2CCC2(C)C(CCC12)C(=O)CO deoxycorticosterone
CC12CC(O)C3C(CCC4=CC(=O)C=CC34C)C1CCC2(O)C(=O)CO prednisolone
CC(C)CCCC(C)C1CCC2C3CC=C4CC(O)CCC4(C)C3CCC12C cholesterol
OC(=O)CCCc1ccc(N(CCCl)CCCl)cc1 chlorambucil
ClCCN(CCCl)P1(=O)NCCCO1 cyclophosphamide
Nc1nc(F)nc2n(cnc12)C1OC(CO)C(O)C1O fludarabine_like
O=C1NC(=O)C(F)=CN1 fluorouracil
CN(Cc1cnc2nc(N)nc(N)c2n1)c1ccc(cc1)C(=O)NC(CCC(=O)O)C(=O)O methotrexate
CC(C)(C)NC(=O)C1CC2CCCCC2CN1CC(O)C(Cc1ccccc1)NC(=O)C(CC(N)=O)NC(=O)c1ccc2ccccc2n1 saquinavir_big
Nc1ccn(C2OC(CO)C(O)C2(F)F)c(=O)n1 gemcitabine
CC1CCC(CC1)NC(=O)NS(=O)(=O)c1ccc(CCNC(=O)N2CC(C)=C(CC)C2=O)cc1 glimepiride
COc1ccc(CC(C)NCC(O)c2ccc(O)c(NC=O)c2)cc1 formoterol
Cc1ccc(C)c(OCCCC(C)(C)C(=O)O)c1 gemfibrozil
CC(C)(Oc1ccc(Cl)cc1)C(=O)O clofibric_acid
CC(C)OC(=O)C(C)(C)Oc1ccc(cc1)C(=O)c1ccc(Cl)cc1 fenofibrate
Clc1ccc2c(c1)C(=NCC(=O)N2)c1ccccc1 nordazepam
CC(C)NCC(O)c1ccc(O)c(O)c1 isoprenaline
COc1ccccc1OCC(O)CN1CCN(CC(=O)Nc2c(C)cccc2C)CC1 ranolazine
COc1ccccc1N1CCN(CCCNc2cc(=O)n(C)c(=O)n2C)CC1 urapidil
O=C(CCCN1CCC(CC1)n1c(=O)[nH]c2ccccc12)c1ccc(F)cc1 droperidol_like
COC1=CC(=O)CC(C)C12Oc1c(Cl)c(OC)cc(OC)c1C2=O griseofulvin
CC(=O)Nc1nnc(s1)S(N)(=O)=O acetazolamide2
NC(=N)c1ccc(cc1)OCCCCCOc1ccc(cc1)C(N)=N pentamidine
Clc1ccc(cc1)C(c1ccccc1)N1CCN(CC1)CCOCCO hydroxyzine
O=C(N1CCCC1)c1ccc(O)cc1 hydroxybenzoyl_pyrrolidine
CC(=O)c1ccc(S(=O)(=O)NC(=O)NC2CCCCC2)cc1 acetohexamide
CCOC(=O)c1c(C)[nH]c(C)c1C(=O)OCC pyrrole_diester
Cc1onc(c1C(=O)NC1C2SC(C)(C)C(N2C1=O)C(=O)O)-c1ccccc1 oxacillin
COc1cccc(OC)c1C(=O)NC1C2SC(C)(C)C(N2C1=O)C(=O)O methicillin
CC1=C(N2C(C(C2=O)NC(=O)C(N)c2ccccc2)SC1)C(=O)O cephalexin
OC(=O)C(Cc1ccc(O)c(I)c1)N iodotyrosine
Oc1c(I)cc(Cc2cc(I)c(O)c(I)c2)cc1I tetraiodo_core
CCC(CC)O propanol_ethyl
OCCN(CCO)CCO triethanolamine
CC(C)(C)OC(=O)NCC(=O)O boc_glycine
O=C(OCc1ccccc1)NCC(=O)O cbz_glycine
CC(C)C[C@H](NC(=O)OC(C)(C)C)C(=O)O boc_leucine
"""


def kekule_smiles(smiles):
    mol = Chem.MolFromSmiles(smiles)
    if mol is None:
        return None
    for bond in mol.GetBonds():
        bond.SetStereo(Chem.BondStereo.STEREONONE)
        bond.SetBondDir(Chem.BondDir.NONE)
    Chem.Kekulize(mol, clearAromaticFlags=True)
    return Chem.MolToSmiles(mol, kekuleSmiles=True, canonical=False)


def main(path):
    allowed = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
    seen = set()
    lines = []
    for raw in SOURCE.strip().splitlines():
        smiles, name = raw.split()
        if "." in smiles:
            continue
        mol = Chem.MolFromSmiles(smiles)
        if mol is None:
            print("skip (unparsable):", name, file=sys.stderr)
            continue
        atoms = mol.GetAtoms()
        if mol.GetNumAtoms() > 40 or any(a.GetSymbol() not in allowed for a in atoms):
            print("skip (size/elements):", name, file=sys.stderr)
            continue
        if any(abs(a.GetFormalCharge()) > 2 for a in atoms):
            continue
        key = Chem.MolToSmiles(mol)
        if key in seen:
            continue
        seen.add(key)
        lines.append(f"{kekule_smiles(smiles)}")
    with open(path, "w") as out:
        out.write("# Drug-like molecules in Kekule form, one per line.\n")
        for line in lines:
            out.write(line + "\n")
    print(len(lines), "molecules", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "corpus.smi")
