"""Plain-text sentence corpora: small built-in word banks per language plus
seeded sentence samplers, standing in for a large news corpus.

`make_corpus_lines` can guarantee every bank word appears at least twice,
which keeps pair-merge vocabularies trainable to their full target size.
"""

import numpy as np

EN_WORDS = """
the of and to in is was for that it with as his on be at by had not are
this but from they which she you were her all their there been one have
when who will more if out so said what up its about into than them can
only other new some could time these two may then do first any my now
such like our over man me even most made after also did many before must
through years where much your way well down should because each just
those people how too little state good very make world still own see men
work long get here between both life being under never day same another
know while last might us great old year off come since against go came
right used take three states himself few house use during without again
place around however home small found thought went say part once general
high upon school every think don't does got united left number course war
until always away something fact water though less public put thing
almost hand enough far took head yet government system better set told
nothing night end why called didn't eyes find going look asked later
point next program knew city business give group toward young days let
room within children side social given order early president possible
rather face per often among
question answer morning evening afternoon window garden mountain river
street market station teacher student doctor mother father brother sister
family friend village country language history science nature picture
moment minute second hundred thousand million together important different
beautiful interesting necessary available national political economic
development education information experience situation condition position
direction attention question building company industry service product
market money value price report research result problem change increase
growth period century process project member community society culture
region nation century structure strength purpose reason measure support
effort effect trouble matter figure ground board paper letter article
story music sound light color spring summer winter autumn weather season
north south east west player football stadium theater holiday journey
travel passenger airport railway vehicle driver machine computer network
message signal record fashion quality quantity standard balance benefit
budget capital income profit debate decision opinion evidence argument
knowledge memory thought feeling emotion passion courage danger safety
health hospital medicine patient disease treatment nature animal forest
flower bridge castle church palace tower wall floor kitchen bedroom
furniture clothes pocket bottle coffee dinner breakfast supper kingdom
empire soldier officer captain general battle victory defeat treaty
meeting conference congress council committee election campaign policy
minister government parliament justice freedom religion spirit universe
planet ocean island desert valley climate energy petroleum electric
""".split()

FR_WORDS = """
le de un etre et a il avoir ne je son que se qui ce dans en du elle au
pour pas vous par sur faire plus dire me on mon lui nous comme mais
pouvoir avec tout y aller voir bien ou sans tu leur homme si deux mari
moi vouloir te femme venir quand grand celui meme notre devoir la jour
monsieur demander alors apres trouver personne rendre part dont non fois
tres chose votre donner heure monde savoir falloir voila passer temps
peu premier aimer autre enfin rien jeune seul rester toujours regarder
nouveau quelque chez question donc maison nuit oui rue main chambre
matin soir semaine mois annee siecle histoire langue pays ville village
campagne montagne riviere fleuve jardin fenetre porte table chaise livre
lettre papier journal musique lumiere couleur printemps hiver automne
saison famille frere soeur mere pere enfant ami ecole maitre eleve
medecin malade sante travail argent prix valeur marche affaire societe
culture nation peuple gouvernement ministre justice liberte religion
esprit nature animal foret fleur pont chateau eglise palais mur cuisine
vetement bouteille diner dejeuner royaume empire soldat officier bataille
victoire reunion conseil decision opinion preuve argument connaissance
memoire pensee sentiment courage danger securite energie avenir moyen
raison mesure effort effet figure terre ciel mer etoile soleil lune eau
feu vent pluie neige chemin route voyage voiture train avion bateau
est-ce peut-etre c'est n'est qu'il d'un l'homme aujourd'hui rendez-vous
grand-mere lui-meme quelqu'un
""".split()

DE_WORDS = """
der die und in den von zu das mit sich des auf fur ist im dem nicht ein
eine als auch es an werden aus er hat dass sie nach wird bei einer um am
sind noch wie einem uber einen so zum war haben nur oder aber vor zur bis
mehr durch man sein wurde sei gross schon hier sagen gehen wir machen
jahr zeit wollen gut wissen mussen stadt land kind frau mann tag haus
wasser leben welt hand teil frage recht ende weg
morgen abend woche monat jahrhundert geschichte sprache dorf garten
fenster berg fluss strasse markt bahnhof lehrer schuler arzt mutter vater
bruder schwester familie freund kultur volk regierung minister freiheit
religion geist natur tier wald blume brucke schloss kirche palast turm
wand boden kuche zimmer kleidung flasche kaffee abendessen konigreich
reich soldat offizier schlacht sieg vertrag sitzung rat entscheidung
meinung beweis wissen gedanke gefuhl mut gefahr sicherheit gesundheit
krankenhaus medizin patient krankheit behandlung energie zukunft mittel
grund mass wirkung gestalt erde himmel meer stern sonne mond feuer wind
regen schnee pfad reise wagen zug flugzeug schiff arbeit geld preis wert
geschaft gesellschaft bildung erfahrung lage richtung aufmerksamkeit
gebaude firma industrie dienst produkt bericht forschung ergebnis problem
wechsel wachstum zeitraum vorgang mitglied gemeinde bereich nation aufbau
kraft zweck anlass stutze muhe sache zahl brett papier brief artikel
erzahlung musik klang licht farbe fruhling sommer winter herbst wetter
""".split()

WORD_BANKS = {"en": EN_WORDS, "fr": FR_WORDS, "de": DE_WORDS}


def make_corpus_lines(language, count, seed, words_range=(3, 9),
                      question_rate=0.12, ensure_coverage=True):
    """Sample `count` sentence lines from a language's word bank.

    With `ensure_coverage` the sampler first cycles the full bank (twice)
    before drawing freely, so every word occurs at least twice when `count`
    allows it.
    """
    words = WORD_BANKS[language]
    rng = np.random.default_rng(np.random.SeedSequence((seed, hash_tag(language))))
    forced = list(words) * 2 if ensure_coverage else []
    fi = 0
    lines = []
    for _ in range(count):
        k = int(rng.integers(words_range[0], words_range[1] + 1))
        sent = []
        for _ in range(k):
            if fi < len(forced):
                sent.append(forced[fi])
                fi += 1
            else:
                sent.append(words[int(rng.integers(0, len(words)))])
        sent[0] = sent[0][:1].upper() + sent[0][1:]
        end = " ?" if rng.random() < question_rate else "."
        lines.append(" ".join(sent) + end)
    return lines


def hash_tag(text):
    """Stable small integer tag for a string (for seed sequences)."""
    return sum(ord(c) * (i + 1) for i, c in enumerate(text)) % 65521


def make_lexicon(letters, n_words, seed, lengths=(2, 5)):
    """Fixed word list over a restricted letter set (the desk-scale task)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 4242)))
    letters = list(letters)
    words = []
    seen = set()
    while len(words) < n_words:
        k = int(rng.integers(lengths[0], lengths[1] + 1))
        w = "".join(letters[int(rng.integers(0, len(letters)))] for _ in range(k))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def make_sentences(lexicon, count, seed, words_range=(1, 4), end="."):
    """Sentences of 1..k lexicon words ending with a punctuation glyph."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 515)))
    lines = []
    for _ in range(count):
        k = int(rng.integers(words_range[0], words_range[1] + 1))
        lines.append(" ".join(lexicon[int(rng.integers(0, len(lexicon)))]
                              for _ in range(k)) + end)
    return lines


# The two desk-scale glyph languages, 12 lowercase classes each. Language B
# shares most of A's alphabet and adds a few unseen glyphs (n, v, x) with an
# entirely new lexicon: the same regime as transferring a Latin-script
# encoder across European languages, where folded alphabets mostly coincide.
DESK_LETTERS_A = "abcdehlmostu"
DESK_LETTERS_B = "acdemnostuvx"


def desk_lexicon(which="a", n_words=24, seed=7):
    if which == "a":
        return make_lexicon(DESK_LETTERS_A, n_words, seed)
    return make_lexicon(DESK_LETTERS_B, n_words, seed + 14)
